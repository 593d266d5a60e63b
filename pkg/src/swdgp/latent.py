"""Latent-grid SWD-GP (LGSWD) for scattered 1-D data.

Off-grid targets are projected onto a regular grid of inducing points.  The
matrix ``Q = K_gg + K_gx L^{-1} K_xg`` is inverted perturbatively: in the
standing-wave basis of ``K_gg`` each mode ``k`` couples only to its mirror
``M + 1 - k``, leaving independent 2x2 problems.

Everything that touches the grid runs through the banded FFT helpers of
:mod:`swdgp.swd`, so a fit costs O(p^2 N + p M log M) and never forms an
M x M matrix.  With the pair solution written as

    Q^{-1} = sum_k g_k v_k v_k^T + sum_k h_k v_k v_{M+1-k}^T

applying ``Q^{-1}`` in mode space is ``g * c + h * c[::-1]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exact import PredictiveResult
from .kernel import (
    GridSpec,
    KernelParams,
    _as_points,
    _check_band,
    prior_variance,
    sparse_cross_kernel,
)
from .swd import (
    SWDEigensystem,
    band_quadratic_forms,
    build_eigensystem,
    inverse_band,
    mode_sum_band,
    sparse_band_quadratic,
)

__all__ = [
    "LatentFitError",
    "LatentProjection",
    "ResidualReport",
    "PairSolution",
    "default_grid",
    "solve_pairs",
    "projection_band",
    "latent_fit",
    "latent_predict",
    "residual_diagnostic",
    "posterior_covariance_diag",
]

_CLAMP_TOL = 1e-10


class LatentFitError(ArithmeticError):
    """A perturbed eigenvalue of ``Q`` came out non-positive."""

    def __init__(self, message, mode=None, value=None):
        super().__init__(message)
        self.mode = mode
        self.value = value


@dataclass(frozen=True)
class PairSolution:
    """Per-mode solution of the 2x2 pair problems.

    Slot ``k`` (0-based) belongs to the pair ``(k, M-1-k)``.  For the lower
    member ``chi[k]`` is ``chi_+`` and ``cos_phi, sin_phi`` rotate it out of
    ``(v_k, v_kbar)``; the upper member holds ``chi_-`` and repeats the angle.
    """

    chi: np.ndarray
    phi: np.ndarray
    cos_phi: np.ndarray
    sin_phi: np.ndarray

    def inverse_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """``(g, h)`` such that ``Q^{-1} = sum g_k v_k v_k^T + sum h_k v_k v_kbar^T``."""
        M = self.chi.shape[0]
        g = np.empty(M)
        h = np.zeros(M)
        half = M // 2
        lo = np.arange(half)
        hi = M - 1 - lo
        c, s = self.cos_phi[lo], self.sin_phi[lo]
        inv_p, inv_m = 1.0 / self.chi[lo], 1.0 / self.chi[hi]
        g[lo] = c * c * inv_p + s * s * inv_m
        g[hi] = s * s * inv_p + c * c * inv_m
        h[lo] = h[hi] = c * s * (inv_p - inv_m)
        if M % 2:
            g[half] = 1.0 / self.chi[half]
        return g, h


def solve_pairs(lam, eps, delta=None) -> PairSolution:
    """Diagonalise ``[[lam + eps, delta], [delta, lam_bar + eps_bar]]`` for every pair.

    ``delta=None`` is first order: no rotation and ``chi = lam + eps``.  A
    pair with ``delta == 0`` keeps its unperturbed vectors; the larger
    eigenvalue goes to ``chi_+`` (angle 0 or pi/2), matching the limit of the
    coupled solution.
    """
    diag = np.asarray(lam, dtype=float) + np.asarray(eps, dtype=float)
    M = diag.shape[0]
    c = np.ones(M)
    s = np.zeros(M)
    phi = np.zeros(M)
    if delta is None:
        return PairSolution(diag, phi, c, s)

    delta = np.asarray(delta, dtype=float)
    chi = diag.copy()
    lo = np.arange(M // 2)
    hi = M - 1 - lo
    A, D, d = diag[lo], diag[hi], delta[lo]
    bp = 0.5 * (A + D)
    bm = 0.5 * (A - D)
    rho = np.hypot(bm, d)
    ang = 0.5 * np.arctan2(d, bm)

    coupled = d != 0.0
    swap = ~coupled & (bm < 0.0)
    chi[lo] = np.where(coupled, bp + rho, np.maximum(A, D))
    chi[hi] = np.where(coupled, bp - rho, np.minimum(A, D))
    ang = np.where(coupled, ang, np.where(swap, 0.5 * np.pi, 0.0))
    # exact 0/1 for uncoupled pairs so they reproduce the first-order weights bit for bit
    cl = np.where(coupled, np.cos(ang), np.where(swap, 0.0, 1.0))
    sl = np.where(coupled, np.sin(ang), np.where(swap, 1.0, 0.0))
    for arr, val in ((phi, ang), (c, cl), (s, sl)):
        arr[lo] = val
        arr[hi] = val
    return PairSolution(chi, phi, c, s)


@dataclass(frozen=True)
class ResidualReport:
    """Split of ``B = K_gx L^{-1} K_xg`` into ``a I + b T + R`` (``T`` the nearest-neighbour matrix)."""

    a: float
    b: float
    diag_ratio: float
    offdiag_ratio: float
    residual_max: float
    threshold: float
    valid: bool

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class LatentProjection:
    grid: GridSpec
    params: KernelParams
    band_order: int
    order: int
    eig: SWDEigensystem
    n_data: int
    pairs: PairSolution = field(repr=False)
    epsilon: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    # projected means at the grid nodes
    g_bar: np.ndarray = field(repr=False)
    # K_gg^{-1} g_bar, the weights seen by test rows
    weights: np.ndarray = field(repr=False)
    obs_variance: np.ndarray = field(repr=False)
    n_floored: int = 0
    precision_band: np.ndarray = field(default=None, repr=False)
    kinv_band: np.ndarray = field(default=None, repr=False)
    qinv_band: np.ndarray = field(default=None, repr=False)

    @property
    def M(self) -> int:
        return self.grid.count[0]

    @property
    def chi(self) -> np.ndarray:
        return self.pairs.chi

    @property
    def lam(self) -> np.ndarray:
        return self.eig.eigenvalues

    @property
    def beta_plus(self) -> np.ndarray:
        d = self.lam + self.epsilon
        return 0.5 * (d + d[::-1])

    @property
    def beta_minus(self) -> np.ndarray:
        d = self.lam + self.epsilon
        return 0.5 * (d - d[::-1])


def default_grid(X, M: int) -> GridSpec:
    """``M`` evenly spaced nodes spanning the data."""
    X = np.asarray(X, dtype=float).reshape(-1)
    if X.size == 0:
        return GridSpec.uniform(0.0, 1.0, M)
    return GridSpec.uniform(float(X.min()), float(X.max()), M)


def projection_band(rows, weights, M: int, width: int) -> np.ndarray:
    """Band of ``sum_i w_i r_i r_i^T`` for sparse rows ``r_i``; ``out[d, a] = B[a, a+d]``."""
    idx, val = rows.indices, rows.values
    out = np.zeros(width * M)
    if idx.shape[0] == 0:
        return out.reshape(width, M)
    P = idx.shape[1]
    for s in range(P):
        for u in range(P):
            d = idx[:, u] - idx[:, s]
            # padded slots (index 0, value 0) can produce any offset; only in-band ones matter
            keep = (d > 0) & (d < width) if s != u else np.ones_like(d, dtype=bool)
            if not keep.any():
                continue
            flat = d[keep] * M + idx[keep, s]
            out += np.bincount(flat, weights=(weights * val[:, s] * val[:, u])[keep], minlength=width * M)
    return out.reshape(width, M)


def _mode_apply(g, h, c):
    return g * c + h * c[::-1]


def latent_fit(
    X,
    y,
    params: KernelParams,
    band_order: int = 3,
    order: int = 1,
    grid: GridSpec | None = None,
    grid_size: int | None = None,
) -> LatentProjection:
    """Project scattered targets onto a latent grid.

    ``grid`` defaults to ``grid_size`` evenly spaced nodes over the data.
    """
    _check_band(band_order)
    if order not in (1, 2):
        raise ValueError(f"perturbation order must be 1 or 2, got {order}")
    if params.ndim != 1:
        raise ValueError("the latent grid supports 1-D inputs only")
    nv = params.noise_variance
    if not nv > 0.0:
        raise ValueError("latent projection needs a positive noise variance (Lambda^{-1} is undefined otherwise)")
    X = _as_points(X, 1)[:, 0]
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{y.shape[0]} targets for {X.shape[0]} inputs")
    if grid is None:
        if grid_size is None:
            raise ValueError("pass either grid or grid_size")
        grid = default_grid(X, grid_size)
    if grid.ndim != 1:
        raise ValueError("the latent grid must be one-dimensional")

    M = grid.count[0]
    s2 = params.signal_variance
    eig = build_eigensystem(M, params, grid.spacing[0], band_order)
    kinv = inverse_band(eig, band_order)

    rows = sparse_cross_kernel(X, grid, params, band_order)
    cond = prior_variance(X, grid, params, band_order) - sparse_band_quadratic(rows.indices, rows.values, kinv)
    n_floored = int(np.count_nonzero(cond < 0.0))
    lam_x = np.maximum(cond, 0.0) + nv
    w = 1.0 / lam_x

    B = projection_band(rows, w, M, band_order)
    eps = band_quadratic_forms(B, M)
    delta = band_quadratic_forms(B, M, paired=True) if order == 2 else np.zeros(M)
    pairs = solve_pairs(eig.eigenvalues, eps, delta if order == 2 else None)
    bad = np.flatnonzero(~(pairs.chi > 0.0))
    if bad.size:
        k = int(bad[0])
        raise LatentFitError(
            f"perturbed eigenvalue chi_{k + 1} = {pairs.chi[k]:.3e} is not positive", mode=k + 1, value=float(pairs.chi[k])
        )
    g, h = pairs.inverse_weights()

    b = rows.rmatvec(w * y) if y.size else np.zeros(M)
    # a = Q^{-1} b in mode space; g_bar = K a; K^{-1} g_bar = a
    coef = _mode_apply(g, h, eig.project(b))
    a = eig.synthesize(coef)
    g_bar = eig.synthesize(eig.eigenvalues * coef)

    return LatentProjection(
        grid=grid,
        params=params,
        band_order=band_order,
        order=order,
        eig=eig,
        n_data=int(X.shape[0]),
        pairs=pairs,
        epsilon=eps,
        delta=delta,
        g_bar=g_bar,
        weights=a,
        obs_variance=lam_x,
        n_floored=n_floored,
        precision_band=B,
        kinv_band=kinv,
        qinv_band=mode_sum_band(g, M, band_order, h),
    )


def latent_predict(model: LatentProjection, Xs) -> PredictiveResult:
    """Predictive mean and variance at 1-D test inputs.

    ``variance`` is ``K** - k K^{-1} k + k Q^{-1} k`` with the conditional part
    floored at zero, and ``observation_variance`` adds the noise.
    """
    Xs = _as_points(Xs, 1)[:, 0]
    p = model.params
    r = sparse_cross_kernel(Xs, model.grid, p, model.band_order)
    mean = np.einsum("ts,ts->t", r.values, model.weights[r.indices])
    cond = prior_variance(Xs, model.grid, p, model.band_order) - sparse_band_quadratic(r.indices, r.values, model.kinv_band)
    n_clamped = int(np.count_nonzero(cond < -_CLAMP_TOL * p.signal_variance))
    var = np.maximum(cond, 0.0) + sparse_band_quadratic(r.indices, r.values, model.qinv_band)
    var = np.maximum(var, 0.0)
    return PredictiveResult(mean, var, var + p.noise_variance, n_clamped)


def residual_diagnostic(model: LatentProjection, threshold: float = 0.5) -> ResidualReport:
    """Measure how far ``K_gx L^{-1} K_xg`` is from ``a I + b T``.

    Ratios are standard deviation over mean along the main and first
    off-diagonal.  Small ratios mean the perturbation is nearly diagonal in
    the standing-wave basis.
    """
    B = model.precision_band
    M = model.M
    if model.n_data == 0 or B is None:
        return ResidualReport(0.0, 0.0, 0.0, 0.0, 0.0, threshold, True)
    diag = B[0]
    off = B[1, : M - 1] if B.shape[0] > 1 and M > 1 else np.zeros(0)
    a = float(diag.mean())
    b = float(off.mean()) if off.size else 0.0

    def ratio(v, m):
        return float(v.std() / abs(m)) if v.size and m != 0.0 else 0.0

    rd, ro = ratio(diag, a), ratio(off, b)
    parts = [np.abs(diag - a)]
    if off.size:
        parts.append(np.abs(off - b))
    for d in range(2, min(B.shape[0], M)):
        parts.append(np.abs(B[d, : M - d]))
    rmax = float(max(x.max() for x in parts if x.size))
    return ResidualReport(a, b, rd, ro, rmax, threshold, bool(rd < threshold and ro < threshold))


def posterior_covariance_diag(model: LatentProjection) -> np.ndarray:
    """Diagonal of the grid posterior covariance ``K_gg Q^{-1} K_gg``."""
    g, h = model.pairs.inverse_weights()
    lam = model.eig.eigenvalues
    return mode_sum_band(lam * lam * g, model.M, 1, lam * lam[::-1] * h)[0]
