"""Standing-wave eigensystem of banded grid kernels.

The eigenvectors of a tridiagonal Toeplitz matrix of size ``M`` are sampled
sine waves, ``[v_k]_j = sin(j theta_k) / sqrt((M + 1) / 2)`` with
``theta_k = k pi / (M + 1)``, independent of the matrix entries.  Only the
eigenvalues depend on the kernel.  The eigenvector matrix is symmetric and
orthogonal, so projecting onto the basis and synthesising from it are the same
sine transform up to normalisation.

Indices in this module are 1-based where they name modes or grid nodes in the
public API (``k``, ``j``); arrays are ordinary 0-based numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernel import (
    KernelParams,
    PositivityError,
    alpha as _alpha,
    max_length_scale_ratio,
    normalized_band_eigenvalues,
)

__all__ = [
    "SWDEigensystem",
    "build_eigensystem",
    "eigensystem_from_alpha",
    "eigenvector_component",
    "eigenvector_matrix",
    "eigenvector_transform",
    "apply_inverse",
    "reconstruction_coefficient",
    "cosine_sum_matrix",
    "reconstructed_matrix",
    "cosine_series",
    "mode_sum_band",
    "band_quadratic_forms",
    "inverse_band",
    "sparse_band_quadratic",
]


@dataclass(frozen=True)
class SWDEigensystem:
    """Analytic eigensystem of a banded grid kernel, ordered by mode index ``k``."""

    M: int
    band_order: int
    alpha: float
    signal_variance: float
    angles: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def norm(self) -> float:
        """``sqrt((M + 1) / 2)``, the eigenvector normalisation."""
        return math.sqrt((self.M + 1) / 2.0)

    @property
    def normalized_eigenvalues(self) -> np.ndarray:
        return self.eigenvalues / self.signal_variance

    def vectors(self) -> np.ndarray:
        """Dense eigenvector matrix, column ``k - 1`` is ``v_k``."""
        return eigenvector_matrix(self.M)

    def project(self, y, axis: int = 0, method: str = "fft") -> np.ndarray:
        """Coefficients ``v_k . y`` for every mode."""
        return eigenvector_transform(y, axis=axis, method=method) / self.norm

    def synthesize(self, c, axis: int = 0, method: str = "fft") -> np.ndarray:
        """``sum_k c_k v_k``."""
        return eigenvector_transform(c, axis=axis, method=method) / self.norm


def eigensystem_from_alpha(M: int, a: float, signal_variance: float, band_order: int) -> SWDEigensystem:
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    lam = signal_variance * normalized_band_eigenvalues(a, M, band_order)
    if lam.min() <= 0.0:
        bound = max_length_scale_ratio(band_order, M)
        raise PositivityError(
            f"standing-wave eigenvalue {lam.min():.3e} <= 0 for alpha={a:.6g}, M={M}, "
            f"band order {band_order}; length_scale/spacing must stay below {bound:.6g}",
            min_eigenvalue=float(lam.min()),
            bound=bound,
        )
    angles = np.arange(1, M + 1) * np.pi / (M + 1)
    return SWDEigensystem(M, band_order, float(a), float(signal_variance), angles, lam)


def build_eigensystem(
    M: int, params: KernelParams, spacing: float, band_order: int, dim: int = 0
) -> SWDEigensystem:
    a = _alpha(params.length_scales[dim], spacing)
    return eigensystem_from_alpha(M, a, params.signal_variance, band_order)


def eigenvector_component(k: int, j: int, M: int) -> float:
    """``[v_k]_j`` for 1-based mode ``k`` and node ``j``."""
    if not (1 <= k <= M and 1 <= j <= M):
        raise IndexError(f"k={k}, j={j} out of range 1..{M}")
    return math.sin(j * k * math.pi / (M + 1)) / math.sqrt((M + 1) / 2.0)


def eigenvector_matrix(M: int) -> np.ndarray:
    """``V[j - 1, k - 1] = [v_k]_j``; symmetric and orthogonal."""
    jk = np.outer(np.arange(1, M + 1), np.arange(1, M + 1))
    # reduce jk mod 2(M+1) so paired modes see identical sine arguments
    jk = jk % (2 * (M + 1))
    return np.sin(jk * np.pi / (M + 1)) / math.sqrt((M + 1) / 2.0)


def _transform_direct(y: np.ndarray) -> np.ndarray:
    M = y.shape[0]
    out = np.empty_like(y)
    k = np.arange(1, M + 1)
    # row blocks keep the sine table bounded for large M
    step = max(1, (1 << 22) // max(M, 1))
    for start in range(0, M, step):
        j = np.arange(start + 1, min(start + step, M) + 1)
        S = np.sin(((np.outer(j, k)) % (2 * (M + 1))) * np.pi / (M + 1))
        out[start : start + len(j)] = np.tensordot(S, y, axes=(1, 0))
    return out


def _transform_fft(y: np.ndarray) -> np.ndarray:
    M = y.shape[0]
    L = 2 * (M + 1)
    z = np.zeros((L,) + y.shape[1:])
    z[1 : M + 1] = y
    z[M + 2 :] = -y[::-1]
    return -np.fft.fft(z, axis=0).imag[1 : M + 1] / 2.0


def eigenvector_transform(y, M: int | None = None, axis: int = 0, method: str = "fft") -> np.ndarray:
    """Unnormalised sine transform ``w_j = sum_k sin(k theta_j) y_k``.

    ``method="fft"`` extends ``y`` oddly to length ``2(M + 1)`` and keeps half of
    the imaginary spectrum (O(M log M)); ``method="direct"`` sums explicitly (O(M^2)).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 0:
        raise ValueError("y must be at least 1-D")
    if M is not None and y.shape[axis] != M:
        raise ValueError(f"length {y.shape[axis]} along axis {axis} does not match M={M}")
    if y.shape[axis] == 0:
        return y.copy()
    y = np.moveaxis(y, axis, 0)
    if method == "fft":
        w = _transform_fft(y)
    elif method == "direct":
        w = _transform_direct(y)
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.moveaxis(w, 0, axis)


def apply_inverse(eig: SWDEigensystem, y, method: str = "fft") -> np.ndarray:
    """``K^{-1} y = sum_k v_k (v_k . y) / lambda_k``."""
    y = np.asarray(y, dtype=float)
    if y.shape[0] != eig.M:
        raise ValueError(f"vector length {y.shape[0]} does not match M={eig.M}")
    lam = eig.eigenvalues.reshape((-1,) + (1,) * (y.ndim - 1))
    return eig.synthesize(eig.project(y, method=method) / lam, method=method)


def reconstruction_coefficient(p_arg: int, M: int) -> int:
    """``a(p) = sum_{k=1}^{M} cos(k p pi / (M + 1))`` in closed form.

    ``M`` when ``p`` is a multiple of ``2(M + 1)``, else ``-(1 + (-1)**p) / 2``:
    ``-1`` for even ``p`` and ``0`` for odd ``p``.
    """
    if p_arg % (2 * (M + 1)) == 0:
        return M
    return -1 if p_arg % 2 == 0 else 0


def cosine_sum_matrix(q: int, M: int) -> np.ndarray:
    """``sum_k cos(q theta_k) v_k v_k^T`` assembled entrywise from ``a(.)``."""
    if q < 0:
        raise ValueError(f"q must be >= 0, got {q}")
    i = np.arange(1, M + 1)[:, None]
    j = np.arange(1, M + 1)[None, :]
    a = np.vectorize(lambda p: reconstruction_coefficient(int(p), M), otypes=[float])
    out = a(i - j + q) + a(i - j - q) - a(i + j + q) - a(i + j - q)
    return out / (2.0 * (M + 1))


def reconstructed_matrix(eig: SWDEigensystem) -> np.ndarray:
    """Pentadiagonal kernel rebuilt from its standing-wave eigenvalues."""
    if eig.band_order != 5:
        raise ValueError("reconstruction applies to band order 5 only; the tridiagonal case is exact")
    a = eig.alpha
    out = cosine_sum_matrix(0, eig.M) + 2.0 * a * cosine_sum_matrix(1, eig.M)
    out += 2.0 * a**4 * cosine_sum_matrix(2, eig.M)
    return eig.signal_variance * out


def _cos_fft(c: np.ndarray) -> np.ndarray:
    # Re sum_m c_m exp(-2 pi i m n / L) = sum_m c_m cos(m n pi / (M + 1)) for L = 2(M + 1)
    return np.fft.fft(c, axis=0).real


def cosine_series(coef, M: int | None = None) -> np.ndarray:
    """``C(n) = sum_{k=1}^{M} coef_k cos(n theta_k)`` for ``n = 0 .. 2M + 1``."""
    coef = np.asarray(coef, dtype=float)
    M = coef.shape[0] if M is None else M
    c = np.zeros((2 * (M + 1),) + coef.shape[1:])
    c[1 : M + 1] = coef
    return _cos_fft(c)


def mode_sum_band(g, M: int, width: int, h=None) -> np.ndarray:
    """Band of ``sum_k g_k v_k v_k^T + sum_k h_k v_k v_{M+1-k}^T``.

    Returns ``out[d, a] = S[a, a + d]`` (0-based ``a``) for ``d < width``;
    positions past the matrix edge are zero.  ``h`` must be symmetric under
    ``k -> M + 1 - k`` for the result to be symmetric.
    """
    g = np.asarray(g, dtype=float)
    G = cosine_series(g, M)
    H = cosine_series(np.asarray(h, dtype=float), M) if h is not None else None
    L = 2 * (M + 1)
    out = np.zeros((width, M))
    a = np.arange(1, M + 1)
    for d in range(min(width, M)):
        aa = a[: M - d]
        b = aa + d
        vals = G[d] - G[(aa + b) % L]
        if H is not None:
            sign = np.where(b % 2 == 1, 1.0, -1.0)
            vals = vals + sign * (H[d] - H[(aa + b) % L])
        out[d, : M - d] = vals / (M + 1)
    return out


def band_quadratic_forms(band, M: int | None = None, paired: bool = False) -> np.ndarray:
    """Quadratic forms of a symmetric banded matrix in the standing-wave basis.

    ``band[d, a]`` holds ``B[a, a + d]`` (0-based).  Returns ``v_k^T B v_k`` for
    every mode, or ``v_{M+1-k}^T B v_k`` with ``paired=True``.  Cost O(M log M)
    per band instead of the O(M^2) of a dense projection.
    """
    band = np.asarray(band, dtype=float)
    M = band.shape[1] if M is None else M
    L = 2 * (M + 1)
    a = np.arange(1, M + 1)
    s = np.where(a % 2 == 1, 1.0, -1.0) if paired else np.ones(M)
    P = np.zeros(band.shape[0])
    R = np.zeros(L)
    for d in range(min(band.shape[0], M)):
        vals = band[d, : M - d]
        if d == 0:
            w = vals * s
        else:
            w = vals * (s[: M - d] + s[d:])
        P[d] = w.sum()
        np.add.at(R, 2 * a[: M - d] + d, w)
    theta = np.arange(1, M + 1) * np.pi / (M + 1)
    direct = np.cos(np.outer(theta, np.arange(len(P)))) @ P
    return (direct - _cos_fft(R)[1 : M + 1]) / (M + 1)


def inverse_band(eig: SWDEigensystem, width: int) -> np.ndarray:
    """Band of ``K^{-1}``: ``out[d, a] = (K^{-1})[a, a + d]`` for ``d < width``."""
    return mode_sum_band(1.0 / eig.eigenvalues, eig.M, width)


def sparse_band_quadratic(indices, values, band) -> np.ndarray:
    """``r_t^T S r_t`` for sparse rows ``r_t`` and a symmetric matrix ``S`` given by its band.

    Rows are ``(indices[t], values[t])`` pairs whose columns span fewer than
    ``band.shape[0]`` consecutive indices.
    """
    indices = np.asarray(indices)
    values = np.asarray(values, dtype=float)
    out = np.zeros(indices.shape[0])
    width = band.shape[0]
    for s in range(indices.shape[1]):
        for u in range(indices.shape[1]):
            lo = np.minimum(indices[:, s], indices[:, u])
            # padded slots sit at index 0 with zero value; clip keeps the gather in range
            d = np.minimum(np.abs(indices[:, s] - indices[:, u]), width - 1)
            out += values[:, s] * values[:, u] * band[d, lo]
    return out
