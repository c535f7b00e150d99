import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import sph_harm_y

from wrtkit.chang import default_mask, divide_by_w0
from wrtkit.errors import ConvergenceError
from wrtkit.grids import build_plane_grid
from wrtkit.kunyansky import (
    HarmonicWeight,
    KunyanskyConfig,
    QOperator,
    apply_Q,
    circular_harmonics,
    harmonic_weight,
    kun2d,
    sigma_bound,
    solve,
    spherical_harmonics,
)


def unit_hw(N, K=4, dim=2, pg=None):
    hw = harmonic_weight(None, 2 * K + 2 if pg is None else pg.n_phi, K, dim=dim, plane_grid=pg, N=N)
    return hw.slice(N // 2) if dim == 2 else hw


def synthetic_hw(N, ratio, rng):
    """2D harmonic weight with c_2 = ratio * c_0 on a random positive c_0."""
    c = np.zeros((3, N, N), dtype=complex)
    c[0] = 0.5 + rng.random((N, N))
    c[2] = ratio * c[0] * np.exp(1j * rng.uniform(0, 2 * np.pi, (N, N)))
    return HarmonicWeight(c, 2)


# -- harmonic expansion -------------------------------------------------------


def test_unit_weight_has_only_zeroth_harmonic():
    hw = harmonic_weight(None, 16, 6, N=9)
    assert np.all(hw.coeffs[0] == 1)
    assert np.max(np.abs(hw.coeffs[1:])) < 1e-12


def test_cosine_weight_harmonics():
    n = 32
    alphas = 2 * np.pi * np.arange(n) / n
    c = circular_harmonics(1 + 0.4 * np.cos(alphas), 8)
    assert c[0] == pytest.approx(1.0, abs=1e-12)
    assert c[1] == pytest.approx(0.2, abs=1e-12)  # c_{-1} = conj(c_1)
    assert np.max(np.abs(c[2:])) < 1e-12


def test_insufficient_directions_rejected():
    with pytest.raises(ValueError):
        circular_harmonics(np.ones(9), 4)
    with pytest.raises(ValueError):
        spherical_harmonics(np.ones((3, 8)), build_plane_grid(9, 8, 3), 3)
    with pytest.raises(ValueError):
        harmonic_weight(None, 9, 4, N=5)


@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_circular_parseval(seed, K):
    rng = np.random.default_rng(seed)
    n = 2 * K + 2
    alphas = 2 * np.pi * np.arange(n) / n
    a = rng.standard_normal(K + 1)
    b = rng.standard_normal(K + 1)
    b[0] = 0
    W = sum(a[k] * np.cos(k * alphas) + b[k] * np.sin(k * alphas) for k in range(K + 1))
    c = circular_harmonics(W, K)
    energy = np.abs(c[0]) ** 2 + 2 * np.sum(np.abs(c[1:]) ** 2)
    assert energy == pytest.approx(np.mean(W**2), rel=1e-10, abs=1e-12)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_spherical_parseval(seed):
    rng = np.random.default_rng(seed)
    L = 4
    pg = build_plane_grid(9, 2 * L + 2, L + 1)
    psi, phi = pg.psi[:, None], pg.phi[None, :]
    coef = {(l, j): rng.standard_normal() + 1j * rng.standard_normal() for l in range(L + 1) for j in range(-l, l + 1)}
    W = sum(v * sph_harm_y(l, j, psi, phi) for (l, j), v in coef.items())
    got = spherical_harmonics(W, pg, L)
    for key, v in coef.items():
        assert got[key] == pytest.approx(v, abs=1e-10)
    quad = np.sum(pg.direction_weights() * np.abs(W) ** 2)
    assert quad == pytest.approx(sum(abs(v) ** 2 for v in coef.values()), rel=1e-10)


def test_conjugate_symmetry_of_stored_weight(ci_cell):
    hw = ci_cell("f1", "a1").hw3
    for l, j in [(2, 1), (2, 2), (1, 1)]:
        np.testing.assert_allclose(hw.w(l, -j), (-1) ** j * np.conj(hw.w(l, j)))


def test_order_beyond_stored_harmonics_rejected():
    hw = unit_hw(9, K=2)
    with pytest.raises(ValueError):
        hw.terms(2)


# -- sigma and Q ---------------------------------------------------------------


@pytest.mark.parametrize("m", [0, 1, 2])
def test_unit_weight_sigma_and_q_vanish(m):
    N = 17
    D = default_mask(N)
    hw2 = unit_hw(N)
    assert sigma_bound(hw2, D[N // 2], m) == 0
    u = np.random.default_rng(m).standard_normal((N, N)) * D[N // 2]
    assert not apply_Q(u, hw2, D[N // 2], m).any()
    pg = build_plane_grid(N, 10, 5)
    hw3 = unit_hw(N, K=4, dim=3, pg=pg)
    assert sigma_bound(hw3, D, m) == 0
    assert np.max(np.abs(apply_Q(np.ones((N, N, N)) * D, hw3, D, m))) < 1e-12


def test_q_is_zero_for_m0():
    rng = np.random.default_rng(1)
    hw = synthetic_hw(17, 0.3, rng)
    D = default_mask(17)[8]
    u = rng.standard_normal((17, 17))
    assert not apply_Q(u, hw, D, 0).any()
    assert sigma_bound(hw, D, 0) == 0.0


def test_q_is_zero_for_direction_independent_weight():
    rng = np.random.default_rng(2)
    c = np.zeros((5, 17, 17), dtype=complex)
    c[0] = 0.5 + rng.random((17, 17))
    hw = HarmonicWeight(c, 2)
    D = default_mask(17)[8]
    assert not apply_Q(rng.standard_normal((17, 17)), hw, D, 2).any()


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_q_linearity(seed, alpha):
    rng = np.random.default_rng(seed)
    hw = synthetic_hw(17, 0.3, rng)
    Q = QOperator(hw, default_mask(17)[8], 1)
    A, B = rng.standard_normal((2, 17, 17))
    lhs, rhs = Q(alpha * A + B), alpha * Q(A) + Q(B)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.abs(rhs).max())


@pytest.mark.parametrize("attenuation", ["a1", "a2"])
@pytest.mark.parametrize("dim", [2, 3])
def test_monte_carlo_norm_probe(ci_cell, attenuation, dim):
    cell = ci_cell("f1", attenuation)
    Q, sigma = cell._q(dim), cell.sigma(dim)
    D = cell.D[cell.iz] if dim == 2 else cell.D
    rng = np.random.default_rng(dim)
    worst = 0.0
    for i in range(20):
        u = rng.standard_normal(D.shape)
        if i % 2:  # alternate white noise with smooth fields
            u = np.cumsum(np.cumsum(u, axis=-1), axis=-2)
        u = u * D
        worst = max(worst, np.linalg.norm(Q(u)) / np.linalg.norm(u))
    assert worst <= sigma + 0.05


def test_sigma_zero_only_above_order_zero(ci_cell):
    cell = ci_cell("f1", "a1")
    assert sigma_bound(cell.hw2, cell.D[cell.iz], 0) == 0.0
    assert 0 < cell.sigma(2) < 1
    assert 0 < cell.sigma(3) < 1


def test_weaker_attenuation_gives_smaller_sigma(ci_cell):
    for dim in (2, 3):
        assert ci_cell("f1", "a2").sigma(dim) < ci_cell("f1", "a1").sigma(dim)


# -- solver --------------------------------------------------------------------


def test_refuses_when_sigma_at_least_one():
    rng = np.random.default_rng(3)
    hw = synthetic_hw(17, 0.6, rng)  # sigma = 2 * 0.6
    D = default_mask(17)[8]
    with pytest.raises(ConvergenceError) as exc:
        solve(rng.standard_normal((17, 17)), hw, KunyanskyConfig(m=1, D=D))
    assert exc.value.sigma == pytest.approx(1.2)
    assert exc.value.exit_code == 4


def test_m0_equals_chang(ci_cell):
    cell = ci_cell("f1", "a1")
    iz = cell.iz
    D = cell.D[iz]
    g = np.random.default_rng(4).standard_normal(D.shape)
    f, _, info = solve(g, cell.hw2, KunyanskyConfig(m=0, D=D))
    assert np.max(np.abs(f - divide_by_w0(g, cell.hw2.w0, D))) < 1e-10
    assert info.sigma == 0.0


@pytest.mark.parametrize("dim", [2, 3])
def test_geometric_convergence_on_a2(ci_cell, dim):
    cell = ci_cell("f1", "a2")
    info = cell.reference.info["kun2d" if dim == 2 else "kun3d"]
    assert info.converged
    for r in info.ratios[1:]:
        assert r <= info.sigma + 0.05


@pytest.mark.parametrize("key", ["kun2d", "kun3d"])
@pytest.mark.parametrize("attenuation", ["a1", "a2"])
def test_residual_certificate(ci_cell, attenuation, key):
    info = ci_cell("f1", attenuation).reference.info[key]
    tol = ci_cell("f1", attenuation).cfg.tol
    assert info.residual <= tol * (1 + info.sigma) / (1 - info.sigma)


@pytest.mark.parametrize("key", ["kun2d", "kun3d"])
def test_weaker_attenuation_needs_no_more_iterations(ci_cell, key):
    strong = ci_cell("f1", "a1").reference.info[key]
    weak = ci_cell("f1", "a2").reference.info[key]
    assert weak.iterations <= strong.iterations


@pytest.mark.parametrize("dim", [2, 3])
def test_fixed_point_consistency(ci_cell, dim):
    cell = ci_cell("f1", "a1")
    hw = cell.hw2 if dim == 2 else cell.hw3
    D = cell.D[cell.iz] if dim == 2 else cell.D
    Q = cell._q(dim)
    f = (cell.f[cell.iz] if dim == 2 else cell.f) * D
    u = hw.w0 * f
    g = u + Q(u)
    tol = 1e-8
    got, _, info = solve(g, hw, KunyanskyConfig(m=1, max_iter=200, tol=tol, D=D), Q=Q)
    assert np.linalg.norm(got - f) / np.linalg.norm(f) <= tol / (1 - info.sigma) * 10


def test_convergence_log_lines(ci_cell):
    info = ci_cell("f1", "a1").reference.info["kun2d"]
    assert len(info.log_lines) == info.iterations
    j, upd, ratio = info.log_lines[1].split()
    assert int(j) == 2 and float(upd) == pytest.approx(info.updates[1], rel=1e-6)


def test_kunyansky_beats_chang_against_truth_on_a1(ci_cell):
    cell = ci_cell("f1", "a1")
    truth = cell.f[cell.iz]
    ref = cell.reference.slices

    def err(k):
        return np.linalg.norm(ref[k] - truth) / np.linalg.norm(truth)

    assert err("kun3d") < err("chang3d")


def test_kun2d_stack_of_slices(ci_cell):
    cell = ci_cell("f1", "a2")
    f, _, _ = kun2d(cell.rays[cell.iz], cell.hw2, KunyanskyConfig(1, 50, 1e-6, cell.D[cell.iz]))
    np.testing.assert_allclose(f, cell.reference.slices["kun2d"], atol=1e-12)
