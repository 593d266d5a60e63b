#!/usr/bin/env python3
"""Tridiagonal and pentadiagonal SWD-GP against the dense GP on a 20-point grid."""
import numpy as np

from _common import out_dir, write_columns
from swdgp import GridSpec, KernelParams, exact_fit, exact_predict, grid_fit, grid_predict_fft, max_length_scale_ratio
from swdgp.bench import target_function


def main():
    f = target_function("fig4")
    grid = GridSpec.uniform(0.0, 1.0, 20)
    x = grid.axis()
    xs = np.linspace(0.0, 1.0, 500)
    d = out_dir("fig4")
    for band, ell in ((3, 0.03), (5, 0.04)):
        params = KernelParams(1.0, ell)
        swd = grid_predict_fft(grid_fit(grid, f(x), params, band), xs)
        full = exact_predict(exact_fit(x, f(x), params.replace(noise_variance=1e-10)), xs)
        ratio = ell / grid.spacing[0]
        print(f"p={band}: ell/spacing={ratio:.3f} (bound {max_length_scale_ratio(band, 20):.3f}), "
              f"max |swd - full GP| = {np.abs(swd.mean - full.mean).max():.3e}")
        write_columns(d / f"pred_p{band}.csv", x=xs, swd_mean=swd.mean, swd_variance=swd.variance,
                      gp_mean=full.mean, gp_variance=full.variance, truth=f(xs))


if __name__ == "__main__":
    main()
