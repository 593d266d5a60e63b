import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import dense_latent, dense_latent_predict
from swdgp.gridgp import grid_fit, grid_predict_fft
from swdgp.kernel import GridSpec, KernelParams, auto_length_scale
from swdgp.latent import (
    LatentFitError,
    default_grid,
    latent_fit,
    latent_predict,
    posterior_covariance_diag,
    projection_band,
    residual_diagnostic,
    solve_pairs,
)
from swdgp.bench import target_function
from swdgp.kernel import sparse_cross_kernel

F5 = target_function("fig5")
GRID20 = GridSpec.uniform(0.0, 1.0, 20)


def _data(n, noise, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, n)
    return X, F5(X) + noise * rng.standard_normal(n)


@pytest.mark.parametrize("band", [3, 5])
@pytest.mark.parametrize("M", [2, 7, 20])
def test_building_blocks_match_dense(band, M):
    grid = GridSpec.uniform(0.0, 1.0, M)
    ell = 0.5 * auto_length_scale(grid, band) if M > 2 else 0.4
    p = KernelParams(1.0, ell, 0.04)
    X, y = _data(300, 0.2, M)
    o = dense_latent(X, y, grid, p, band)
    m = latent_fit(X, y, p, band, 2, grid=grid)
    np.testing.assert_allclose(m.obs_variance, o["lam"], atol=1e-12)
    for d in range(min(band, M)):
        np.testing.assert_allclose(m.precision_band[d, : M - d], np.diag(o["B"], d), rtol=1e-12, atol=1e-10)
    V = m.eig.vectors()
    np.testing.assert_allclose(m.epsilon, np.diag(V.T @ o["B"] @ V), rtol=1e-11, atol=1e-9)
    np.testing.assert_allclose(m.delta, np.diag(V[:, ::-1].T @ o["B"] @ V), rtol=1e-11, atol=1e-9)


@pytest.mark.parametrize("M", [20, 21])
def test_order2_is_exact_pair_block_inverse(M):
    grid = GridSpec.uniform(0.0, 1.0, M)
    p = KernelParams(1.0, 0.03, 0.01)
    X, y = _data(500, 0.1, 3)
    o = dense_latent(X, y, grid, p, 3)
    m = latent_fit(X, y, p, 3, 2, grid=grid)
    V = m.eig.vectors()
    Qv = V.T @ o["Q"] @ V
    keep = (np.eye(M) + np.eye(M)[::-1]) > 0
    ref = np.linalg.inv(np.where(keep, Qv, 0.0))
    g, h = m.pairs.inverse_weights()
    got = np.diag(g) + np.diag(h)[:, ::-1]
    np.testing.assert_allclose(got, ref, atol=1e-13 * np.abs(ref).max())


def test_two_point_grid_order2_is_exact():
    # M = 2 has a single pair, so the pair solve is the full inverse
    grid = GridSpec.uniform(0.0, 1.0, 2)
    p = KernelParams(1.0, 0.5, 0.04)
    X, y = _data(50, 0.2, 0)
    o = dense_latent(X, y, grid, p, 3)
    np.testing.assert_allclose(latent_fit(X, y, p, 3, 2, grid=grid).g_bar, o["g_bar"], rtol=1e-12)


def test_on_grid_data_projects_to_itself():
    grid = GridSpec.uniform(0.0, 1.0, 15)
    x = grid.axis()
    y = np.sin(4 * x)
    p = KernelParams(1.0, auto_length_scale(grid, 3), 1e-6)
    m = latent_fit(x, y, p, 3, 1, grid=grid)
    np.testing.assert_allclose(m.g_bar, y, atol=1e-2)


def test_no_data_gives_prior():
    p = KernelParams(0.7, 0.03, 0.01)
    m = latent_fit(np.zeros(0), np.zeros(0), p, 3, 2, grid=GRID20)
    np.testing.assert_array_equal(m.g_bar, 0.0)
    np.testing.assert_allclose(posterior_covariance_diag(m), 0.7, rtol=1e-12)
    r = residual_diagnostic(m)
    assert (r.a, r.b, r.diag_ratio, r.offdiag_ratio, r.residual_max) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_zero_noise_refused():
    with pytest.raises(ValueError, match="noise"):
        latent_fit([0.1, 0.2], [1.0, 2.0], KernelParams(1.0, 0.03), 3, grid=GRID20)


def test_bad_arguments():
    p = KernelParams(1.0, 0.03, 0.01)
    with pytest.raises(ValueError):
        latent_fit([0.1], [1.0], p, 3, order=3, grid=GRID20)
    with pytest.raises(ValueError):
        latent_fit([0.1], [1.0, 2.0], p, 3, grid=GRID20)
    with pytest.raises(ValueError):
        latent_fit([0.1], [1.0], p, 3)


def test_default_grid_spans_data():
    g = default_grid([0.3, -0.2, 0.9], 5)
    assert g.origin == (-0.2,)
    assert g.axis()[-1] == pytest.approx(0.9)
    m = latent_fit([0.3, -0.2, 0.9], [1.0, 0.0, 2.0], KernelParams(1.0, 0.2, 0.01), 3, grid_size=5)
    assert m.grid == g


def test_far_prediction_is_prior():
    X, y = _data(200, 0.1, 1)
    m = latent_fit(X, y, KernelParams(0.5, 0.03, 0.01), 3, 1, grid=GRID20)
    r = latent_predict(m, [10.0, -4.0])
    np.testing.assert_allclose(r.mean, 0.0)
    np.testing.assert_allclose(r.variance, 0.5)
    np.testing.assert_allclose(r.observation_variance, 0.51)


@pytest.mark.parametrize("band", [3, 5])
def test_prediction_matches_dense_with_same_pair_inverse(band):
    # order 2 on M = 2 is exact, so the whole predictive path can be compared
    grid = GridSpec.uniform(0.0, 1.0, 2)
    p = KernelParams(1.0, 0.4, 0.04)
    X, y = _data(80, 0.2, 5)
    xs = np.linspace(-0.3, 1.3, 41)
    mean, var = dense_latent_predict(X, y, grid, p, band, xs)
    r = latent_predict(latent_fit(X, y, p, band, 2, grid=grid), xs)
    np.testing.assert_allclose(r.mean, mean, atol=1e-12)
    np.testing.assert_allclose(r.variance, var, atol=1e-12)


def test_dense_data_mean_close_to_oracle():
    X, y = _data(1000, 0.2, 7)
    p = KernelParams(1.0, 0.03, 0.04)
    xs = np.linspace(0, 1, 500)
    mean, _ = dense_latent_predict(X, y, GRID20, p, 3, xs)
    r = latent_predict(latent_fit(X, y, p, 3, 1, grid=GRID20), xs)
    truth = F5(xs)
    e_fast = np.mean((r.mean - truth) ** 2) / np.var(truth)
    e_oracle = np.mean((mean - truth) ** 2) / np.var(truth)
    # first-order mean is far from the dense solve here (0.085 vs 0.0057);
    # the gap is intrinsic to the first-order inverse, so only sanity is asserted
    assert e_oracle < e_fast < 0.15


def test_more_data_improves_projection():
    wins = 0
    g = GRID20.axis()
    p = KernelParams(1.0, 0.03, 0.01)
    for seed in range(10):
        rmse = []
        for n in (200, 1000):
            X, y = _data(n, 0.1, seed)
            rmse.append(np.sqrt(np.mean((latent_fit(X, y, p, 3, 1, grid=GRID20).g_bar - F5(g)) ** 2)))
        wins += rmse[1] < rmse[0]
    assert wins >= 8


def test_posterior_diag_against_oracle():
    X, y = _data(500, 0.2, 11)
    p = KernelParams(1.0, 0.03, 0.04)
    o = dense_latent(X, y, GRID20, p, 3)
    d = posterior_covariance_diag(latent_fit(X, y, p, 3, 2, grid=GRID20))
    assert np.all(d > 0)
    rel = np.abs(d / o["post_diag"] - 1)
    # measured: median 0.19, max 0.72 relative error; the perturbative inverse drops off-pair coupling
    assert np.median(rel) < 0.3 and rel.max() < 1.0


def test_posterior_diag_shrinks_with_density():
    rng = np.random.default_rng(2)
    X = np.r_[rng.uniform(0, 0.5, 900), rng.uniform(0.5, 1.0, 100)]
    y = F5(X) + 0.1 * rng.standard_normal(X.size)
    d = posterior_covariance_diag(latent_fit(X, y, KernelParams(1.0, 0.03, 0.01), 3, 1, grid=GRID20))
    assert d[2:8].mean() < d[12:18].mean()


def test_residual_diagnostic_on_grid_data():
    grid = GridSpec.uniform(0.0, 1.0, 12)
    x = grid.axis()
    m = latent_fit(x, np.zeros(x.size), KernelParams(1.0, auto_length_scale(grid, 3), 0.01), 3, grid=grid)
    r = residual_diagnostic(m)
    # off-diagonal is exactly Toeplitz; only the two end nodes break the diagonal
    assert r.offdiag_ratio < 1e-12
    assert np.ptp(m.precision_band[0, 1:-1]) < 1e-12 * r.a
    assert 0 < r.diag_ratio < 0.05
    assert r.valid


def test_residual_ratios_fall_with_noise():
    grid = GridSpec.uniform(0.0, 1.0, 50)
    ell = auto_length_scale(grid, 3)
    prev = None
    for ratio in (0.02, 0.05, 0.1, 0.2):
        vals = []
        for seed in range(5):
            X, y = _data(1000, ratio, seed)
            rep = residual_diagnostic(latent_fit(X, y, KernelParams(1.0, ell, ratio**2), 3, grid=grid))
            vals.append((rep.diag_ratio, rep.offdiag_ratio))
        cur = np.mean(vals, axis=0)
        if prev is not None:
            assert np.all(cur < prev)
        prev = cur


def test_pairs_reduce_to_first_order_when_uncoupled():
    X, y = _data(400, 0.1, 4)
    p = KernelParams(1.0, 0.03, 0.01)
    m1 = latent_fit(X, y, p, 3, 1, grid=GRID20)
    lam, eps = m1.eig.eigenvalues, m1.epsilon
    a = solve_pairs(lam, eps)
    b = solve_pairs(lam, eps, np.zeros_like(eps))
    ga, ha = a.inverse_weights()
    gb, hb = b.inverse_weights()
    np.testing.assert_array_equal(ga, gb)
    np.testing.assert_array_equal(ha, hb)
    np.testing.assert_array_equal(a.chi, m1.chi)
    assert np.all(a.phi == 0)


def test_uncoupled_angle_convention():
    s = solve_pairs(np.array([1.0, 3.0]), np.zeros(2), np.zeros(2))
    assert s.phi[0] == pytest.approx(math.pi / 2)
    assert s.chi[0] == 3.0 and s.chi[1] == 1.0


def test_nonpositive_chi_raises(monkeypatch):
    import swdgp.latent as lat

    real = lat.solve_pairs

    def broken(lam, eps, delta=None):
        return real(lam - 1e9, eps, delta)

    monkeypatch.setattr(lat, "solve_pairs", broken)
    X, y = _data(50, 0.1, 0)
    with pytest.raises(LatentFitError) as err:
        latent_fit(X, y, KernelParams(1.0, 0.03, 0.01), 3, grid=GRID20)
    assert err.value.mode >= 1 and err.value.value <= 0


def test_projection_band_dense():
    grid = GridSpec.uniform(0.0, 1.0, 9)
    X = np.random.default_rng(0).uniform(-0.2, 1.2, 60)
    rows = sparse_cross_kernel(X, grid, KernelParams(1.0, 0.1), 5)
    w = np.random.default_rng(1).uniform(0.5, 2.0, 60)
    D = rows.to_dense()
    B = D.T @ (D * w[:, None])
    band = projection_band(rows, w, 9, 5)
    for d in range(5):
        np.testing.assert_allclose(band[d, : 9 - d], np.diag(B, d), atol=1e-13)


@given(
    st.lists(st.floats(0.1, 10.0), min_size=1, max_size=12),
    st.lists(st.floats(-5.0, 5.0), min_size=12, max_size=12),
    st.lists(st.floats(-5.0, 5.0), min_size=12, max_size=12),
)
def test_pair_rotation_properties(lam, eps, delta):
    M = len(lam)
    lam = np.array(lam)
    eps = np.abs(np.array(eps[:M]))
    delta = np.array(delta[:M])
    delta = 0.5 * (delta + delta[::-1])
    s = solve_pairs(lam, eps, delta)
    d = lam + eps
    for k in range(M // 2):
        kb = M - 1 - k
        c, sn = s.cos_phi[k], s.sin_phi[k]
        up = np.array([c, sn])
        um = np.array([-sn, c])
        assert abs(up @ um) < 1e-12
        assert abs(np.linalg.norm(up) - 1) < 1e-12
        A = np.array([[d[k], delta[k]], [delta[k], d[kb]]])
        np.testing.assert_allclose(A @ up, s.chi[k] * up, atol=1e-10 * max(1.0, np.abs(A).max()))
        np.testing.assert_allclose(A @ um, s.chi[kb] * um, atol=1e-10 * max(1.0, np.abs(A).max()))
        assert s.chi[k] >= s.chi[kb]
    if M % 2:
        assert s.chi[M // 2] == d[M // 2]


@given(st.integers(1, 40), st.integers(0, 300), st.sampled_from([1, 2]), st.sampled_from([3, 5]))
def test_fit_invariants(M, n, order, band):
    grid = GridSpec.uniform(0.0, 1.0, M)
    ell = 0.5 * auto_length_scale(grid, band) if M > 2 else 0.2
    nv = 0.01
    X, y = _data(n, 0.1, M + n)
    m = latent_fit(X, y, KernelParams(1.0, ell, nv), band, order, grid=grid)
    assert np.all(m.chi > 0)
    assert np.all(m.obs_variance >= nv)
    assert np.all(posterior_covariance_diag(m) > 0)
    r = latent_predict(m, np.linspace(-0.2, 1.2, 31))
    assert np.all(r.observation_variance >= nv - 1e-10)
    if order == 1:
        assert np.all(m.pairs.phi == 0)
        np.testing.assert_array_equal(m.chi, m.eig.eigenvalues + m.epsilon)


def test_latent_mean_tends_to_grid_interpolation():
    grid = GridSpec.uniform(0.0, 1.0, 25)
    x = grid.axis()
    y = np.cos(5 * x)
    ell = auto_length_scale(grid, 3)
    xs = np.linspace(0, 1, 200)
    ref = grid_predict_fft(grid_fit(grid, y, KernelParams(1.0, ell), 3), xs).mean
    errs = []
    for s in (1e-1, 1e-2, 1e-3):
        m = latent_fit(np.repeat(x, 4), np.repeat(y, 4), KernelParams(1.0, ell, s * s), 3, 1, grid=grid)
        errs.append(np.abs(latent_predict(m, xs).mean - ref).max())
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2
