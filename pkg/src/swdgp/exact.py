"""Dense GP regression, used as the reference for every approximation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.linalg.lapack import dpotrf

from .kernel import (
    GridSpec,
    KernelParams,
    _as_points,
    banded_grid_kernel,
    kernel_matrix,
    prior_variance,
    sparse_cross_kernel,
)

__all__ = [
    "FactorizationError",
    "PredictiveResult",
    "DenseGPModel",
    "gaussian_condition",
    "exact_fit",
    "exact_fit_banded",
    "exact_predict",
]


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorisation failed; carries the failing pivot and smallest eigenvalue."""

    def __init__(self, message, pivot_index=None, min_eigenvalue=None):
        super().__init__(message)
        self.pivot_index = pivot_index
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True)
class PredictiveResult:
    """Predictive mean and variance at test points.

    ``variance`` is the latent-function variance.  ``observation_variance`` adds
    the observation noise when the model has one.  ``n_clamped`` counts test
    points whose variance came out negative and was set to zero.
    """

    mean: np.ndarray
    variance: np.ndarray
    observation_variance: np.ndarray | None = None
    n_clamped: int = 0


def _cholesky(K):
    c, info = dpotrf(K, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        min_eig = float(np.linalg.eigvalsh(K)[0])
        raise FactorizationError(
            f"kernel matrix is not positive definite: pivot {info} failed "
            f"(smallest eigenvalue {min_eig:.3e})",
            pivot_index=int(info),
            min_eigenvalue=min_eig,
        )
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dpotrf")
    return c


def gaussian_condition(K, k_cross, k_test_diag, y):
    """Condition a zero-mean Gaussian on observed ``y``.

    ``K`` is the observed covariance, ``k_cross`` has shape (n_test, n_obs).
    Returns ``(mean, variance)`` of the test marginals.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    k_cross = np.atleast_2d(np.asarray(k_cross, dtype=float))
    L = _cholesky(K)
    w = cho_solve((L, True), np.asarray(y, dtype=float))
    mean = k_cross @ w
    z = solve_triangular(L, k_cross.T, lower=True)
    var = np.asarray(k_test_diag, dtype=float) - np.sum(z * z, axis=0)
    return mean, var


@dataclass(frozen=True)
class DenseGPModel:
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    params: KernelParams
    chol: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    cross_kernel: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    # k(x, x) at test points; None means the constant signal variance
    prior_diag: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.y.shape[0]


def _fit(X, y, params, K, cross, prior_diag=None):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != K.shape[0]:
        raise ValueError(f"{y.shape[0]} targets for {K.shape[0]} inputs")
    K = K + params.noise_variance * np.eye(K.shape[0])
    L = _cholesky(K)
    w = cho_solve((L, True), y) if y.size else y.copy()
    return DenseGPModel(X, y, params, L, w, cross, prior_diag)


def exact_fit(X, y, params: KernelParams) -> DenseGPModel:
    """Fit with the full (untruncated) SE kernel."""
    X = _as_points(X, params.ndim)
    if X.shape[0] < 1:
        raise ValueError("need at least one training point")
    K = kernel_matrix(X, X, params)
    return _fit(X, y, params, K, lambda Xs: kernel_matrix(Xs, X, params))


def exact_fit_banded(grid: GridSpec, y, params: KernelParams, band_order: int) -> DenseGPModel:
    """Fit on grid data with the same banded kernel and truncated cross-kernel as the SWD path.

    The banded matrix is inverted densely, so comparing with the SWD model
    isolates the decomposition from the truncation.  Targets are in row-major
    grid order.
    """
    if grid.ndim != params.ndim:
        raise ValueError("grid and kernel dimensions differ")
    s2 = params.signal_variance
    K = np.ones((1, 1))
    for n in range(grid.ndim):
        K = np.kron(K, banded_grid_kernel(grid, params, band_order, dim=n).to_dense() / s2)
    K = s2 * K

    def cross(Xs):
        Xs = _as_points(Xs, grid.ndim)
        rows = np.ones((Xs.shape[0], 1))
        for n in range(grid.ndim):
            r = sparse_cross_kernel(Xs[:, n], grid, params, band_order, dim=n, normalized=True).to_dense()
            rows = np.einsum("ti,tj->tij", rows, r).reshape(Xs.shape[0], -1)
        return s2 * rows

    def diag(Xs):
        Xs = _as_points(Xs, grid.ndim)
        out = np.full(Xs.shape[0], s2)
        for n in range(grid.ndim):
            out *= prior_variance(Xs[:, n], grid, params, band_order, dim=n, normalized=True)
        return out

    return _fit(grid.points(), y, params, K, cross, diag)


def exact_predict(model: DenseGPModel, Xs) -> PredictiveResult:
    Xs = _as_points(Xs, model.params.ndim)
    Ks = model.cross_kernel(Xs)
    mean = Ks @ model.weights
    z = solve_triangular(model.chol, Ks.T, lower=True)
    prior = model.params.signal_variance if model.prior_diag is None else model.prior_diag(Xs)
    var = prior - np.sum(z * z, axis=0)
    obs = var + model.params.noise_variance if model.params.noise_variance > 0 else None
    return PredictiveResult(mean, var, obs)
