"""SWD-GP regression for targets observed on a regular grid.

The banded grid kernel of a tensor grid is ``s2 * K_1 (x) ... (x) K_d`` with
unit-variance factors ``K_n``, so its eigenvectors are tensor products of
standing waves and its eigenvalues are ``s2 * prod_n lam_n``.  Observation
noise only shifts the eigenvalues.

Two prediction paths are provided.  :func:`grid_predict` projects each sparse
test row onto every mode (O(pM) per point).  :func:`grid_predict_fft` (1-D)
precomputes ``(K + s_N^2 I)^{-1} y`` and the band of the inverse with FFTs, so
each query is O(p^2).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exact import PredictiveResult
from .kernel import GridSpec, KernelParams, _as_points, _check_band, prior_variance, sparse_cross_kernel
from .swd import SWDEigensystem, build_eigensystem, mode_sum_band, sparse_band_quadratic

__all__ = ["GridGPModel", "grid_fit", "grid_predict", "grid_predict_fft"]

# variances below -_CLAMP_TOL * s2 count as truncation artefacts; smaller ones are rounding
_CLAMP_TOL = 1e-10
_CHUNK = 1 << 21


@dataclass(frozen=True)
class GridGPModel:
    grid: GridSpec
    params: KernelParams
    band_order: int
    eigs: tuple[SWDEigensystem, ...]
    y: np.ndarray = field(repr=False)
    coefficients: np.ndarray = field(repr=False)
    shifted_eigenvalues: np.ndarray = field(repr=False)
    # 1-D fast path caches; None for tensor grids
    solution: np.ndarray | None = field(default=None, repr=False)
    inverse_band: np.ndarray | None = field(default=None, repr=False)

    @property
    def ndim(self) -> int:
        return self.grid.ndim

    def eigenvalue_tensor(self) -> np.ndarray:
        """Kernel eigenvalues ``s2 * prod_n lam_n`` indexed by mode tuple (no noise shift)."""
        return self.shifted_eigenvalues - self.params.noise_variance

    def eigenvectors(self) -> np.ndarray:
        """Dense Kronecker eigenvector matrix; columns in row-major mode order.  Small grids only."""
        V = np.ones((1, 1))
        for e in self.eigs:
            V = np.kron(V, e.vectors())
        return V


def grid_fit(
    grid: GridSpec, y, params: KernelParams, band_order: int, method: str = "fft"
) -> GridGPModel:
    """Project grid targets onto the standing-wave basis.

    ``y`` is in row-major grid order (flat or shaped like the grid).  ``method``
    selects the sine-transform path used for the projection.
    """
    _check_band(band_order)
    if grid.ndim != params.ndim:
        raise ValueError(f"grid has {grid.ndim} dimensions, kernel has {params.ndim}")
    y = np.asarray(y, dtype=float)
    if y.size != grid.size:
        raise ValueError(f"{y.size} targets for a grid of {grid.size} points")
    y = y.reshape(grid.shape)

    eigs = tuple(
        build_eigensystem(grid.count[n], params, grid.spacing[n], band_order, dim=n)
        for n in range(grid.ndim)
    )
    coef = y
    lam = np.asarray(params.signal_variance)
    for n, e in enumerate(eigs):
        coef = e.project(coef, axis=n, method=method)
        lam = np.multiply.outer(lam, e.normalized_eigenvalues)
    lam = lam + params.noise_variance

    solution = band = None
    if grid.ndim == 1:
        e = eigs[0]
        solution = e.synthesize(coef / lam, method=method)
        band = mode_sum_band(1.0 / lam, e.M, band_order)
    return GridGPModel(grid, params, band_order, eigs, y, coef, lam, solution, band)


def _test_points(model, Xs):
    return _as_points(Xs, model.ndim)


def _mode_projections(rows, e: SWDEigensystem, start, stop):
    """``P[t, k] = sum_s rows[t, s] [v_k]_{j_s}`` for a block of test rows."""
    M = e.M
    k = np.arange(1, M + 1)
    j = rows.indices[start:stop] + 1
    arg = (j[..., None] * k) % (2 * (M + 1))
    S = np.sin(arg * (np.pi / (M + 1)))
    return np.einsum("ts,tsk->tk", rows.values[start:stop], S) / e.norm


def _contract(P_list, W):
    # sum over mode tuples of prod_n P_n[t, k_n] * W[k_1, ..., k_d]
    T = P_list[0].shape[0]
    X = P_list[0] @ W.reshape(W.shape[0], -1)
    for P in P_list[1:]:
        X = X.reshape(T, P.shape[1], -1)
        X = np.einsum("tk,tkr->tr", P, X)
    return X.reshape(T)


def _prior(model, Xs):
    out = np.full(Xs.shape[0], model.params.signal_variance)
    for n in range(model.ndim):
        out *= prior_variance(Xs[:, n], model.grid, model.params, model.band_order, dim=n, normalized=True)
    return out


def _finish(model, mean, var):
    s2 = model.params.signal_variance
    n_clamped = int(np.count_nonzero(var < -_CLAMP_TOL * s2))
    var = np.maximum(var, 0.0)
    nv = model.params.noise_variance
    obs = var + nv if nv > 0 else None
    return PredictiveResult(mean, var, obs, n_clamped)


def grid_predict(model: GridGPModel, Xs) -> PredictiveResult:
    """Predict by projecting each truncated test row onto the standing-wave modes."""
    Xs = _test_points(model, Xs)
    T = Xs.shape[0]
    s2 = model.params.signal_variance
    rows = [
        sparse_cross_kernel(Xs[:, n], model.grid, model.params, model.band_order, dim=n, normalized=True)
        for n in range(model.ndim)
    ]
    W = model.coefficients / model.shifted_eigenvalues
    inv_lam = 1.0 / model.shifted_eigenvalues
    mean = np.empty(T)
    quad = np.empty(T)
    step = max(1, _CHUNK // (model.band_order * max(model.grid.count)))
    for start in range(0, T, step):
        stop = min(start + step, T)
        P = [_mode_projections(r, e, start, stop) for r, e in zip(rows, model.eigs)]
        mean[start:stop] = s2 * _contract(P, W)
        quad[start:stop] = s2 * s2 * _contract([p * p for p in P], inv_lam)
    return _finish(model, mean, _prior(model, Xs) - quad)


def grid_predict_fft(model: GridGPModel, Xs) -> PredictiveResult:
    """Same contract as :func:`grid_predict`, O(p^2) per query on a 1-D grid."""
    if model.ndim != 1 or model.solution is None:
        raise ValueError("the FFT prediction path supports 1-D grids only")
    Xs = _test_points(model, Xs)
    s2 = model.params.signal_variance
    r = sparse_cross_kernel(Xs[:, 0], model.grid, model.params, model.band_order, normalized=True)
    mean = s2 * np.einsum("ts,ts->t", r.values, model.solution[r.indices])
    quad = sparse_band_quadratic(r.indices, r.values, model.inverse_band)
    return _finish(model, mean, _prior(model, Xs) - s2 * s2 * quad)
