#!/usr/bin/env python3
"""Std/mean ratios of the projected precision bands against sigma_N / sigma.

Uses a 50-point grid and 1000 uniform samples, averaged over seeds.
"""
import numpy as np

from _common import out_dir, write_columns
from swdgp import GridSpec, KernelParams, auto_length_scale, latent_fit, residual_diagnostic
from swdgp.bench import target_function


def main(seeds=range(10)):
    f = target_function("fig5")
    grid = GridSpec.uniform(0.0, 1.0, 50)
    ell = auto_length_scale(grid, 3)
    ratios = np.array([0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0])
    diag, off = [], []
    for r in ratios:
        dr, orr = [], []
        for s in seeds:
            rng = np.random.default_rng(s)
            X = rng.uniform(0.0, 1.0, 1000)
            y = f(X) + r * rng.standard_normal(1000)
            rep = residual_diagnostic(latent_fit(X, y, KernelParams(1.0, ell, r * r), 3, grid=grid))
            dr.append(rep.diag_ratio)
            orr.append(rep.offdiag_ratio)
        diag.append(np.mean(dr))
        off.append(np.mean(orr))
        print(f"sigma_N/sigma={r:<5} diag std/mean={diag[-1]:.3f} offdiag std/mean={off[-1]:.3f}")
    write_columns(out_dir("fig6") / "ratios.csv", noise_ratio=ratios, diag_ratio=diag, offdiag_ratio=off)


if __name__ == "__main__":
    main()
