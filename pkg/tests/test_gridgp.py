import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swdgp.exact import exact_fit_banded, exact_predict
from swdgp.gridgp import grid_fit, grid_predict, grid_predict_fft
from swdgp.kernel import GridSpec, KernelParams, PositivityError, max_length_scale_ratio


def _params(grid, band, frac, s2=1.0, nv=0.0):
    bound = max_length_scale_ratio(band, grid.count[0])
    ratio = frac * (bound if math.isfinite(bound) else 2.0)
    return KernelParams(s2, ratio * grid.spacing[0], nv)


@pytest.mark.parametrize("band", [3, 5])
@pytest.mark.parametrize("nv", [0.0, 0.05])
def test_matches_dense_banded_oracle(band, nv):
    grid = GridSpec.uniform(-0.5, 1.5, 17)
    p = _params(grid, band, 0.6, 0.8, nv)
    y = np.cos(3 * grid.axis())
    m = grid_fit(grid, y, p, band)
    o = exact_fit_banded(grid, y, p, band)
    xs = np.linspace(-0.5, 1.5, 101)
    a, b = grid_predict(m, xs), exact_predict(o, xs)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-10)
    np.testing.assert_allclose(a.variance, np.maximum(b.variance, 0), atol=1e-10)


@pytest.mark.parametrize("M", [1, 2, 63, 64, 257])
@pytest.mark.parametrize("band", [3, 5])
def test_fft_path_agrees(M, band):
    grid = GridSpec.uniform(0.0, 1.0, M)
    p = _params(grid, band, 0.7, 1.0, 0.01)
    y = np.random.default_rng(M).standard_normal(M)
    m = grid_fit(grid, y, p, band)
    xs = np.linspace(-0.2, 1.2, 333)
    a, b = grid_predict(m, xs), grid_predict_fft(m, xs)
    scale = max(1.0, np.abs(a.mean).max())
    np.testing.assert_allclose(b.mean, a.mean, atol=1e-10 * scale)
    np.testing.assert_allclose(b.variance, a.variance, atol=1e-10)


def test_single_point_grid_blends_prior():
    grid = GridSpec((0.5,), (1.0,), (1,))
    p = KernelParams(1.0, 0.3, 0.25)
    m = grid_fit(grid, [2.0], p, 3)
    r = grid_predict_fft(m, [0.5, 0.8])
    assert r.mean[0] == pytest.approx(2.0 / 1.25)
    k = math.exp(-0.5 * (0.3 / 0.3) ** 2)
    assert r.mean[1] == pytest.approx(k * 2.0 / 1.25)
    assert r.variance[1] == pytest.approx(1 - k * k / 1.25)


def test_far_test_points_recover_prior():
    grid = GridSpec.uniform(0.0, 1.0, 10)
    m = grid_fit(grid, np.ones(10), _params(grid, 3, 0.5, 2.0), 3)
    r = grid_predict_fft(m, [5.0, -5.0])
    np.testing.assert_allclose(r.mean, 0.0)
    np.testing.assert_allclose(r.variance, 2.0)


def test_inadmissible_length_scale():
    grid = GridSpec.uniform(0.0, 1.0, 20)
    with pytest.raises(PositivityError):
        grid_fit(grid, np.zeros(20), KernelParams(1.0, 0.9 / 19), 3)


def test_wrong_target_count():
    with pytest.raises(ValueError):
        grid_fit(GridSpec.uniform(0.0, 1.0, 5), np.zeros(4), KernelParams(1.0, 0.1), 3)


def test_fft_path_rejects_2d():
    grid = GridSpec.uniform([0, 0], [1, 1], [3, 3])
    m = grid_fit(grid, np.zeros(9), KernelParams(1.0, (0.2, 0.2)), 3)
    with pytest.raises(ValueError):
        grid_predict_fft(m, [[0.5, 0.5]])


@pytest.mark.parametrize("shape", [(3, 4), (6, 5), (12, 12)])
@pytest.mark.parametrize("band", [3, 5])
def test_kronecker_2d_against_flattened_oracle(shape, band):
    grid = GridSpec((0.0, -1.0), (0.1, 0.2), shape)
    ls = tuple(0.6 * max_length_scale_ratio(band, max(m, 3)) * d for m, d in zip(shape, grid.spacing))
    p = KernelParams(1.3, ls, 0.02)
    y = np.random.default_rng(sum(shape)).standard_normal(grid.size)
    m = grid_fit(grid, y, p, band)
    o = exact_fit_banded(grid, y, p, band)
    Xs = np.random.default_rng(1).uniform([0, -1], [0.1 * shape[0], -1 + 0.2 * shape[1]], (200, 2))
    a, b = grid_predict(m, Xs), exact_predict(o, Xs)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-8)
    np.testing.assert_allclose(a.variance, np.maximum(b.variance, 0), atol=1e-8)


def test_eigenvectors_diagonalize_kronecker_kernel():
    grid = GridSpec.uniform([0, 0], [1, 1], [4, 5])
    p = KernelParams(1.0, (0.2, 0.15), 0.1)
    m = grid_fit(grid, np.zeros(20), p, 3)
    K = exact_fit_banded(grid, np.zeros(20), p, 3).chol
    K = K @ K.T
    V = m.eigenvectors()
    np.testing.assert_allclose(V.T @ K @ V, np.diag(m.shifted_eigenvalues.ravel()), atol=1e-12)


@given(st.integers(1, 40), st.floats(0.05, 0.999), st.sampled_from([3, 5]), st.floats(0.2, 5.0))
def test_interpolation_property(M, frac, band, s2):
    grid = GridSpec.uniform(0.0, 1.0, M)
    p = _params(grid, band, frac, s2)
    y = np.sin(7 * grid.axis()) + 0.3
    m = grid_fit(grid, y, p, band)
    for predict in (grid_predict, grid_predict_fft):
        r = predict(m, grid.axis())
        np.testing.assert_allclose(r.mean, y, atol=1e-8)
        assert r.variance.max() < 1e-8


@given(st.integers(2, 30), st.floats(0.05, 0.9), st.floats(1e-3, 1.0))
def test_variance_bounded_by_prior(M, frac, nv):
    grid = GridSpec.uniform(0.0, 1.0, M)
    p = _params(grid, 3, frac, 1.0, nv)
    m = grid_fit(grid, np.zeros(M), p, 3)
    r = grid_predict_fft(m, np.linspace(-0.5, 1.5, 77))
    assert np.all(r.variance >= 0)
    assert np.all(r.variance <= 1.0 + 1e-12)
    np.testing.assert_allclose(r.observation_variance, r.variance + nv)
