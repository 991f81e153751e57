import numpy as np
import pytest
from conftest import pair
from hypothesis import given, settings
from hypothesis import strategies as st

from starpls import SystemConfig
from starpls.active import (DualTooSmallError, _DualCurve, _Links, _stationarity_system, lagrangian,
                            log_terms, optimal_beamformers, solve_active, solve_minorant,
                            stationarity_matrices, surrogate_objective, surrogate_terms, update_auxiliaries)
from starpls.rates import LN2, rate_bob, rate_carol, weighted_objective
from starpls.validation import finite_diff_gradient, random_beamformers, random_instance, stationarity_residual

CFG8 = SystemConfig(p_tmax=1.0, m=8, n_t=4)


def test_zero_interferer_gives_trivial_eve_mmse(small_instance):
    cfg, ch, c, bf = small_instance
    aux = update_auxiliaries(ch, c, pair(bf.w_b, np.zeros(cfg.n_t)), cfg)
    assert np.all(aux.u2 == 0) and np.all(aux.u3 == 0)
    assert aux.w2 == 1.0 and aux.w3 == 1.0


def test_weights_positive(small_instance):
    cfg, ch, c, bf = small_instance
    aux = update_auxiliaries(ch, c, bf, cfg)
    assert min(aux.w1, aux.w2, aux.w3, aux.w4, aux.w5, aux.w_c_aux) > 0


@pytest.mark.parametrize("seed", range(5))
def test_rank_one_receiver_matches_dense_solve(seed):
    ch, c, bf = random_instance(CFG8, seed)
    fast = update_auxiliaries(ch, c, bf, CFG8)
    dense = update_auxiliaries(ch, c, bf, CFG8, dense=True)
    for a, b in ((fast.u2, dense.u2), (fast.u3, dense.u3)):
        assert np.linalg.norm(a - b) <= 1e-10 * np.linalg.norm(b)


@pytest.mark.parametrize("seed", range(10))
def test_mmse_bounds_are_tight_at_expansion_point(seed):
    ch, c, bf = random_instance(CFG8, seed)
    aux = update_auxiliaries(ch, c, bf, CFG8)
    exact = log_terms(ch, c, bf, CFG8)
    bound = surrogate_terms(ch, c, aux, bf, CFG8)
    for k in exact:
        assert bound[k] == pytest.approx(exact[k], rel=1e-10, abs=1e-12)
    # f1 and fc are the legitimate rates in nats
    assert exact["f1"] / LN2 == pytest.approx(rate_bob(ch, c, bf, CFG8.sigma2_b), rel=1e-12)
    assert exact["fc"] / LN2 == pytest.approx(rate_carol(ch, c, bf, CFG8.sigma2_c), rel=1e-12)
    assert surrogate_objective(ch, c, aux, bf, CFG8) == pytest.approx(
        weighted_objective(ch, c, bf, CFG8), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 5000), other=st.integers(0, 5000))
def test_surrogate_minorizes(seed, other):
    ch, c, bf = random_instance(CFG8, seed)
    aux = update_auxiliaries(ch, c, bf, CFG8)
    test_bf = random_beamformers(CFG8.n_t, CFG8.p_tmax, np.random.default_rng(other))
    exact = log_terms(ch, c, test_bf, CFG8)
    bound = surrogate_terms(ch, c, aux, test_bf, CFG8)
    for k in exact:
        assert bound[k] <= exact[k] + 1e-9 * max(1.0, abs(exact[k]))


@pytest.mark.parametrize("varrho", [1e-3, 1e-1, 10.0])
def test_closed_form_is_stationary(varrho):
    for seed in range(5):
        ch, c, bf = random_instance(CFG8, seed)
        aux = update_auxiliaries(ch, c, bf, CFG8)
        w = optimal_beamformers(ch, c, aux, varrho, CFG8)
        assert stationarity_residual(ch, c, aux, w, varrho, CFG8, rng=seed) < 1e-6


def test_fd_gradient_oracle_sanity():
    g = finite_diff_gradient(lambda x: float(x @ x), np.array([1.0, 2.0]))
    assert np.allclose(g, [2, 4], atol=1e-6)
    a = np.array([3.0, -1.0, 0.5])
    assert np.allclose(finite_diff_gradient(lambda x: float(a @ x + 7), np.zeros(3)), a, atol=1e-9)
    # complex input: d/d(Re,Im) of |z|^2
    z = np.array([1 + 2j])
    assert np.allclose(finite_diff_gradient(lambda v: float(abs(v[0]) ** 2), z), [2, 4], atol=1e-6)


def test_no_bob_weight_gives_zero_bob_precoder(small_instance):
    cfg, ch, c, bf = small_instance
    tiny = cfg.replace(omega1=1e-300, p1=0.3)
    aux = update_auxiliaries(ch, c, bf, tiny)
    w = optimal_beamformers(ch, c, aux, 1.0, tiny)
    assert np.linalg.norm(w.w_b) < 1e-250


@pytest.mark.parametrize("seed", range(5))
def test_power_nonincreasing_in_multiplier(seed):
    ch, c, bf = random_instance(CFG8, seed)
    aux = update_auxiliaries(ch, c, bf, CFG8)
    grid = np.logspace(-4, 2, 40)
    p = [optimal_beamformers(ch, c, aux, r, CFG8).power for r in grid]
    assert np.all(np.diff(p) <= 1e-12 * np.max(p))
    # the eigen-decomposed curve agrees with the direct solve
    curve = _DualCurve(*_stationarity_system(_Links(ch, c), aux, CFG8))
    assert np.allclose([curve.power(r) for r in grid], p, rtol=1e-8)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 5000), varrho=st.floats(1e-6, 1e3))
def test_stationarity_matrices_positive_definite(seed, varrho):
    ch, c, bf = random_instance(CFG8, seed)
    aux = update_auxiliaries(ch, c, bf, CFG8)
    g1, _, g1h, _ = stationarity_matrices(ch, c, aux, varrho, CFG8)
    for g in (g1, g1h):
        assert np.allclose(g, g.conj().T)
        assert np.linalg.eigvalsh(g).min() > 0


def test_singular_system_at_zero_multiplier():
    cfg = SystemConfig(p_tmax=1.0, m=8, n_t=4, secrecy_aware=False)
    ch, c, bf = random_instance(cfg, 0)
    aux = update_auxiliaries(ch, c, bf, cfg)
    # without the Eve terms, Phi_b has rank 2 < N_t
    with pytest.raises(DualTooSmallError):
        optimal_beamformers(ch, c, aux, 0.0, cfg)
    with pytest.raises(ValueError):
        optimal_beamformers(ch, c, aux, -1.0, cfg)


@pytest.mark.parametrize("seed", range(8))
def test_minorant_solve_ascends_and_is_feasible(seed):
    ch, c, bf = random_instance(CFG8, seed)
    aux = update_auxiliaries(ch, c, bf, CFG8)
    sol = solve_minorant(ch, c, bf, CFG8)
    assert sol.bf.power <= CFG8.p_tmax * (1 + 1e-6)
    assert sol.dual.varrho >= 0
    before = surrogate_objective(ch, c, aux, bf, CFG8)
    after = surrogate_objective(ch, c, aux, sol.bf, CFG8)
    assert after >= before - 1e-8
    # complementary slackness
    assert sol.dual.varrho * abs(sol.bf.power - CFG8.p_tmax) < 1e-4 * CFG8.p_tmax
    # Lagrangian minimality: no feasible random direction beats the solution
    lag = lagrangian(ch, c, aux, sol.bf, sol.dual.varrho, CFG8)
    gen = np.random.default_rng(seed)
    for _ in range(20):
        trial = random_beamformers(CFG8.n_t, CFG8.p_tmax, gen)
        assert lagrangian(ch, c, aux, trial, sol.dual.varrho, CFG8) >= lag - 1e-9


def test_huge_budget_leaves_constraint_slack():
    cfg = SystemConfig(p_tmax=1e12, m=8, n_t=4)
    ch, c, _ = random_instance(cfg, 1)
    bf = random_beamformers(cfg.n_t, 1.0, np.random.default_rng(0))
    sol = solve_minorant(ch, c, bf, cfg)
    assert sol.dual.varrho == 0.0
    assert sol.bf.power < cfg.p_tmax


@pytest.mark.parametrize("seed", range(5))
def test_solve_active_never_decreases_objective(seed):
    ch, c, bf = random_instance(CFG8, seed)
    sol = solve_active(ch, c, bf, CFG8)
    assert sol.bf.power <= CFG8.p_tmax * (1 + 1e-6)
    assert weighted_objective(ch, c, sol.bf, CFG8) >= weighted_objective(ch, c, bf, CFG8) - 1e-8
    one = solve_active(ch, c, bf, CFG8, max_mmse=1)
    assert weighted_objective(ch, c, sol.bf, CFG8) >= weighted_objective(ch, c, one.bf, CFG8) - 1e-8
