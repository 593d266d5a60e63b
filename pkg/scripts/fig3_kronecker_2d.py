#!/usr/bin/env python3
"""Two-dimensional grid regression of sin(4 pi x) cos(4 pi y) on 10x10 and 20x20 grids."""
import numpy as np

from _common import out_dir, write_columns
from swdgp import GridSpec, KernelParams, auto_length_scale, grid_fit, grid_predict


def f(P):
    return np.sin(4 * np.pi * P[:, 0]) * np.cos(4 * np.pi * P[:, 1])


def main():
    t = np.linspace(0.0, 1.0, 61)
    T = np.stack(np.meshgrid(t, t, indexing="ij"), -1).reshape(-1, 2)
    d = out_dir("fig3")
    for M in (10, 20):
        grid = GridSpec((0.0, 0.0), (1.0 / (M - 1),) * 2, (M, M))
        ell = auto_length_scale(grid, 3)
        model = grid_fit(grid, f(grid.points()), KernelParams(1.0, (ell, ell)), 3)
        pred = grid_predict(model, T)
        rmse = np.sqrt(np.mean((pred.mean - f(T)) ** 2))
        print(f"{M}x{M}: ell={ell:.4f} rmse={rmse:.4f}")
        write_columns(d / f"pred_{M}x{M}.csv", x=T[:, 0], y=T[:, 1], mean=pred.mean, truth=f(T))


if __name__ == "__main__":
    main()
