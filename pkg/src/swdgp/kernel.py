"""Squared-exponential kernels, banded grid kernel matrices and sparse cross-kernels.

Grid kernels are truncated to band order ``p`` (3 = tridiagonal, 5 =
pentadiagonal).  For ``p = 5`` the two corner entries carry the reflection
correction that keeps the standing-wave basis an exact eigenbasis, see
:func:`banded_grid_kernel`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

__all__ = [
    "BAND_ORDERS",
    "PositivityError",
    "KernelParams",
    "GridSpec",
    "BandedMatrix",
    "SparseCrossKernel",
    "se_kernel",
    "kernel_matrix",
    "alpha",
    "ratio_from_alpha",
    "normalized_band_eigenvalues",
    "max_length_scale_ratio",
    "banded_grid_kernel",
    "banded_from_alpha",
    "sparse_cross_kernel",
    "prior_variance",
    "auto_length_scale",
]

BAND_ORDERS = (3, 5)

# ties at exactly r*Delta are excluded; slack absorbs rounding of (x - origin) / Delta
_TIE_TOL = 1e-9


class PositivityError(ValueError):
    """Raised when a banded kernel would have a non-positive eigenvalue."""

    def __init__(self, message, min_eigenvalue=None, bound=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.bound = bound


def _check_band(band_order):
    if band_order not in BAND_ORDERS:
        raise ValueError(f"band_order must be one of {BAND_ORDERS}, got {band_order!r}")


@dataclass(frozen=True)
class KernelParams:
    """Hyperparameters of the squared-exponential kernel.

    ``length_scales`` may be given as a scalar for 1-D problems.
    """

    signal_variance: float
    length_scales: tuple[float, ...]
    noise_variance: float = 0.0

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        if ls.ndim != 1 or ls.size == 0:
            raise ValueError("length_scales must be a non-empty 1-D sequence")
        object.__setattr__(self, "length_scales", tuple(float(v) for v in ls))
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        if not self.signal_variance > 0:
            raise ValueError(f"signal_variance must be > 0, got {self.signal_variance}")
        if not all(v > 0 for v in self.length_scales):
            raise ValueError(f"length_scales must be > 0, got {self.length_scales}")
        if not self.noise_variance >= 0:
            raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")

    @property
    def ndim(self) -> int:
        return len(self.length_scales)

    def replace(self, **changes) -> "KernelParams":
        kw = dict(
            signal_variance=self.signal_variance,
            length_scales=self.length_scales,
            noise_variance=self.noise_variance,
        )
        kw.update(changes)
        return KernelParams(**kw)


@dataclass(frozen=True)
class GridSpec:
    """Regular tensor-product grid; point ``j`` along dim ``n`` is ``origin[n] + j * spacing[n]``."""

    origin: tuple[float, ...]
    spacing: tuple[float, ...]
    count: tuple[int, ...]

    def __post_init__(self):
        origin = tuple(float(v) for v in np.atleast_1d(self.origin))
        spacing = tuple(float(v) for v in np.atleast_1d(self.spacing))
        count = tuple(int(v) for v in np.atleast_1d(self.count))
        if not (len(origin) == len(spacing) == len(count)):
            raise ValueError("origin, spacing and count must have the same length")
        if not all(d > 0 for d in spacing):
            raise ValueError(f"grid spacing must be > 0, got {spacing}")
        if not all(m >= 1 for m in count):
            raise ValueError(f"grid count must be >= 1, got {count}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "count", count)

    @classmethod
    def uniform(cls, lower, upper, count) -> "GridSpec":
        """Grid of ``count`` points spanning ``[lower, upper]`` in every dimension.

        Scalars give a 1-D grid.  A single point gets unit spacing.
        """
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        count = np.atleast_1d(np.asarray(count, dtype=int))
        lower, upper, count = np.broadcast_arrays(lower, upper, count)
        spacing = [
            (hi - lo) / (m - 1) if m > 1 else 1.0 for lo, hi, m in zip(lower, upper, count)
        ]
        return cls(tuple(lower), tuple(spacing), tuple(count))

    @property
    def ndim(self) -> int:
        return len(self.count)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.count

    @property
    def size(self) -> int:
        return int(np.prod(self.count))

    def axis(self, dim: int = 0) -> np.ndarray:
        return self.origin[dim] + self.spacing[dim] * np.arange(self.count[dim])

    def points(self) -> np.ndarray:
        """All grid points, shape ``(size, ndim)``, row-major (last dimension fastest)."""
        axes = np.meshgrid(*[self.axis(n) for n in range(self.ndim)], indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    def sub(self, dim: int) -> "GridSpec":
        """The 1-D grid along one dimension."""
        return GridSpec((self.origin[dim],), (self.spacing[dim],), (self.count[dim],))


@dataclass(frozen=True)
class BandedMatrix:
    """Symmetric banded matrix stored by diagonals.

    ``diagonals[d]`` holds entries ``(i, i + d)`` for ``d = 0 .. (p - 1) / 2``.
    """

    size: int
    band_order: int
    diagonals: tuple[np.ndarray, ...]

    def __post_init__(self):
        _check_band(self.band_order)
        half = (self.band_order - 1) // 2
        if len(self.diagonals) != half + 1:
            raise ValueError(f"band order {self.band_order} needs {half + 1} diagonals")
        for d, diag in enumerate(self.diagonals):
            if len(diag) != max(self.size - d, 0):
                raise ValueError(f"diagonal {d} has length {len(diag)}, expected {self.size - d}")

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.size, self.size))
        for d, diag in enumerate(self.diagonals):
            if d == 0:
                out[np.diag_indices(self.size)] = diag
            elif len(diag):
                out += np.diag(diag, d) + np.diag(diag, -d)
        return out

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.size:
            raise ValueError(f"vector length {v.shape[0]} does not match matrix size {self.size}")
        out = self.diagonals[0].reshape((-1,) + (1,) * (v.ndim - 1)) * v
        for d in range(1, len(self.diagonals)):
            diag = self.diagonals[d].reshape((-1,) + (1,) * (v.ndim - 1))
            out[:-d] += diag * v[d:]
            out[d:] += diag * v[:-d]
        return out

    def to_sparse(self) -> sp.csr_matrix:
        offsets, data = [], []
        for d, diag in enumerate(self.diagonals):
            if d == 0:
                offsets.append(0)
                data.append(diag)
            elif len(diag):
                offsets += [d, -d]
                data += [diag, diag]
        return sp.diags(data, offsets, shape=(self.size, self.size), format="csr")


@dataclass(frozen=True)
class SparseCrossKernel:
    """Cross-kernel between ``N`` points and an ``M``-point grid with at most ``p`` entries per row.

    ``indices[i]`` and ``values[i]`` list the retained grid columns of row ``i``.
    Unused slots carry index 0 and value 0.
    """

    n_grid: int
    band_order: int
    indices: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    @property
    def n_points(self) -> int:
        return self.indices.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_points, self.n_grid)

    def row_nnz(self) -> np.ndarray:
        return np.count_nonzero(self.values, axis=1)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.n_points), self.indices.shape[1])
        np.add.at(out, (rows, self.indices.ravel()), self.values.ravel())
        return out

    def to_csr(self) -> sp.csr_matrix:
        rows = np.repeat(np.arange(self.n_points), self.indices.shape[1])
        return sp.csr_matrix(
            (self.values.ravel(), (rows, self.indices.ravel())), shape=self.shape
        )

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """``K_xg @ v`` for a grid vector ``v``."""
        return np.einsum("ij,ij->i", self.values, np.asarray(v, dtype=float)[self.indices])

    def rmatvec(self, w: np.ndarray) -> np.ndarray:
        """``K_gx @ w`` for a data vector ``w``."""
        return np.bincount(
            self.indices.ravel(),
            weights=(self.values * np.asarray(w, dtype=float)[:, None]).ravel(),
            minlength=self.n_grid,
        )


def se_kernel(x, x2, params: KernelParams) -> float:
    """Squared-exponential covariance between two points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != (params.ndim,) or x2.shape != (params.ndim,):
        raise ValueError(
            f"points must have dimension {params.ndim}, got shapes {x.shape} and {x2.shape}"
        )
    ls = np.asarray(params.length_scales)
    return float(params.signal_variance * np.exp(-0.5 * np.sum(((x - x2) / ls) ** 2)))


def _as_points(X, ndim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and ndim == 1:
        X = X[:, None]
    elif X.ndim == 0:
        X = X.reshape(1, 1)
    if X.ndim != 2 or X.shape[1] != ndim:
        raise ValueError(f"expected points of dimension {ndim}, got array of shape {X.shape}")
    return X


def kernel_matrix(X1, X2, params: KernelParams) -> np.ndarray:
    """Dense SE kernel matrix between two point sets (no truncation)."""
    X1 = _as_points(X1, params.ndim)
    X2 = _as_points(X2, params.ndim)
    ls = np.asarray(params.length_scales)
    sq = np.zeros((X1.shape[0], X2.shape[0]))
    for n in range(params.ndim):
        sq += ((X1[:, n, None] - X2[None, :, n]) / ls[n]) ** 2
    return params.signal_variance * np.exp(-0.5 * sq)


def alpha(length_scale: float, spacing: float) -> float:
    """Nearest-neighbour grid correlation ``exp(-spacing**2 / (2 length_scale**2))``."""
    if not (length_scale > 0 and spacing > 0):
        raise ValueError(f"length_scale and spacing must be > 0, got {length_scale}, {spacing}")
    return math.exp(-(spacing**2) / (2.0 * length_scale**2))


def ratio_from_alpha(a: float) -> float:
    """Inverse of :func:`alpha` in terms of ``length_scale / spacing``."""
    if not 0.0 < a < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {a}")
    return 1.0 / math.sqrt(-2.0 * math.log(a))


def normalized_band_eigenvalues(a, M: int, band_order: int) -> np.ndarray:
    """Standing-wave eigenvalues divided by the signal variance, ordered by mode k = 1..M.

    ``a`` may be an array; the mode axis is appended last.
    """
    _check_band(band_order)
    theta = np.arange(1, M + 1) * np.pi / (M + 1)
    a = np.asarray(a, dtype=float)[..., None]
    lam = 1.0 + 2.0 * a * np.cos(theta)
    if band_order == 5:
        lam = lam + 2.0 * a**4 * np.cos(2.0 * theta)
    return lam


def max_length_scale_ratio(band_order: int, M: int) -> float:
    """Largest ``length_scale / spacing`` keeping every standing-wave eigenvalue positive.

    The bound is the first zero crossing of the smallest eigenvalue as the
    ratio grows from 0.  Returns ``inf`` when no crossing exists for ``alpha < 1``
    (for example ``M = 2`` tridiagonal).
    """
    _check_band(band_order)
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if band_order == 3:
        # min over k is at k = M: 1 - 2 a cos(pi / (M + 1))
        c = math.cos(math.pi / (M + 1))
        a_crit = 1.0 / (2.0 * c)
        # M = 2 gives a_crit = 1 up to rounding: no bound
        return math.inf if a_crit >= 1.0 - 1e-12 else ratio_from_alpha(a_crit)

    def min_eig(a):
        return float(normalized_band_eigenvalues(a, M, band_order).min())

    grid = np.linspace(0.0, 1.0, 2001)[1:]
    mins = normalized_band_eigenvalues(grid, M, band_order).min(axis=-1)
    bad = np.flatnonzero(mins <= 0.0)
    if bad.size == 0:
        return math.inf
    i = bad[0]
    lo = grid[i - 1] if i > 0 else 0.0
    a_crit = brentq(min_eig, lo, grid[i], xtol=1e-15, rtol=1e-15)
    return ratio_from_alpha(a_crit)


def auto_length_scale(grid: GridSpec, band_order: int, fraction: float = 0.75, dim: int = 0) -> float:
    """``fraction`` of the largest admissible length scale for the grid axis."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    ratio = max_length_scale_ratio(band_order, grid.count[dim])
    if math.isinf(ratio):
        raise ValueError(f"no finite length-scale bound for band order {band_order} on {grid.count[dim]} points")
    return fraction * ratio * grid.spacing[dim]


def banded_from_alpha(M: int, a: float, signal_variance: float, band_order: int) -> BandedMatrix:
    """Banded grid kernel built directly from the neighbour correlation ``a``."""
    _check_band(band_order)
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    lam = normalized_band_eigenvalues(a, M, band_order)
    if lam.min() <= 0.0:
        bound = max_length_scale_ratio(band_order, M)
        raise PositivityError(
            f"band order {band_order} kernel with alpha={a:.6g} on {M} points is not positive "
            f"definite (smallest eigenvalue {signal_variance * lam.min():.3e}); "
            f"length_scale/spacing must stay below {bound:.6g}",
            min_eigenvalue=float(signal_variance * lam.min()),
            bound=bound,
        )
    s2 = float(signal_variance)
    diags = [np.full(M, s2), np.full(max(M - 1, 0), s2 * a)]
    if band_order == 5:
        a4 = s2 * a**4
        diags[0][0] -= a4
        diags[0][-1] -= a4
        diags.append(np.full(max(M - 2, 0), a4))
    return BandedMatrix(M, band_order, tuple(diags))


def banded_grid_kernel(
    grid: GridSpec, params: KernelParams, band_order: int, dim: int = 0
) -> BandedMatrix:
    """Banded SE kernel matrix of the grid along dimension ``dim``.

    Tridiagonal: ``s2`` on the diagonal, ``s2 * alpha`` beside it.  Pentadiagonal
    adds ``s2 * alpha**4`` on the second off-diagonals and lowers the two corner
    entries to ``s2 * (1 - alpha**4)``.
    """
    a = alpha(params.length_scales[dim], grid.spacing[dim])
    return banded_from_alpha(grid.count[dim], a, params.signal_variance, band_order)


def _reflections(grid, dim):
    # mirror maps about the virtual nodes one spacing outside each end of the grid
    origin, delta, M = grid.origin[dim], grid.spacing[dim], grid.count[dim]
    left = origin - delta
    right = origin + M * delta
    return (lambda u: 2.0 * left - u), (lambda u: 2.0 * right - u)


def sparse_cross_kernel(
    points, grid: GridSpec, params: KernelParams, band_order: int, dim: int = 0,
    normalized: bool = False,
) -> SparseCrossKernel:
    """Truncated cross-kernel between 1-D points and a grid axis.

    Grid point ``g_j`` is kept for ``x`` when ``|x - g_j| < (p / 2) * spacing``
    (ties are dropped), so each row has at most ``p`` entries.

    For ``p = 5`` and ``x`` inside the grid span, every retained entry also
    subtracts the kernel to the mirror image of ``g_j`` about the virtual nodes
    just outside the grid, when that image lies within the same radius.  On
    grid nodes this is exactly the corner correction of the pentadiagonal
    matrix; elsewhere it only touches the end columns near the ends.  Outside
    the span the plain truncated kernel is used.

    With ``normalized=True`` the signal variance factor is left out.
    """
    _check_band(band_order)
    x = np.asarray(points, dtype=float).reshape(-1)
    M = grid.count[dim]
    origin, delta = grid.origin[dim], grid.spacing[dim]
    ell = params.length_scales[dim]
    scale = 1.0 if normalized else params.signal_variance
    radius = band_order / 2.0 - _TIE_TOL

    t = (x - origin) / delta
    lo = np.floor(t - band_order / 2.0).astype(np.int64) + 1
    idx = lo[:, None] + np.arange(band_order)[None, :]
    keep = (idx >= 0) & (idx < M) & (np.abs(t[:, None] - idx) < radius)
    g = origin + idx * delta
    vals = np.where(keep, np.exp(-0.5 * ((x[:, None] - g) / ell) ** 2), 0.0)

    if band_order == 5:
        inside = ((t > -_TIE_TOL) & (t < M - 1 + _TIE_TOL))[:, None]
        for mirror in _reflections(grid, dim):
            img = mirror(g)
            hit = keep & inside & (np.abs(x[:, None] - img) < radius * delta)
            vals = vals - np.where(hit, np.exp(-0.5 * ((x[:, None] - img) / ell) ** 2), 0.0)

    idx = np.where(keep, idx, 0)
    return SparseCrossKernel(M, band_order, idx, scale * vals)


def prior_variance(
    points, grid: GridSpec, params: KernelParams, band_order: int, dim: int = 0,
    normalized: bool = False,
) -> np.ndarray:
    """Diagonal of the truncated kernel at arbitrary points, ``k(x, x)``.

    Equal to the signal variance except for ``p = 5`` near the grid ends, where
    the mirror-image correction of :func:`sparse_cross_kernel` applies to the
    point itself (``s2 * (1 - alpha**4)`` on the end nodes).
    """
    _check_band(band_order)
    x = np.asarray(points, dtype=float).reshape(-1)
    out = np.ones_like(x)
    if band_order == 5:
        t = (x - grid.origin[dim]) / grid.spacing[dim]
        inside = (t > -_TIE_TOL) & (t < grid.count[dim] - 1 + _TIE_TOL)
        radius = (band_order / 2.0 - _TIE_TOL) * grid.spacing[dim]
        ell = params.length_scales[dim]
        for mirror in _reflections(grid, dim):
            d = x - mirror(x)
            out -= np.where(inside & (np.abs(d) < radius), np.exp(-0.5 * (d / ell) ** 2), 0.0)
    return out if normalized else params.signal_variance * out
