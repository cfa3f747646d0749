import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ALPHA0, X0, make_osnr, random_osnr
from gamedesign import SeparableLogGame, WirelessSirGame
from gamedesign.catalog import osnr_ne, sir_vector, wireless_ne
from gamedesign.core import fd_jacobian
from gamedesign.design import design_price
from gamedesign.errors import DivergenceError, DomainError
from gamedesign.oracles import brute_welfare_max
from gamedesign.pricing import (
    PenaltySpec,
    TwoTimescaleConfig,
    lyapunov_monitor,
    penalty,
    penalty_price_rhs,
    price_ode_rhs,
    run_penalty_loop,
    run_pricing_loop,
    welfare,
    welfare_gradient,
)

FIXTURE_LOOP = dict(epsilon=0.01, dt_fast=5e-5, outer_step=5e4, outer_iters=50)
OSNR_BOX = ([0.005, 0.005], [0.03, 0.03])


@pytest.fixture(scope="module")
def social_max():
    g = make_osnr()
    res = brute_welfare_max(g, box=OSNR_BOX)
    assert res.converged
    return res.value


def test_welfare_gradient_separable_is_own_slope():
    g = SeparableLogGame([3.0, 2.0], [1.0, 0.5])
    x = np.array([0.4, 1.3])
    np.testing.assert_allclose(welfare_gradient(g, x), g.utility.own_partials(x))


@given(st.integers(0, 10_000))
def test_welfare_gradient_osnr_matches_fd(seed):
    rng = np.random.default_rng(seed)
    g = random_osnr(rng, int(rng.integers(2, 4)))
    x = rng.uniform(0.002, 0.05, g.n_players)
    fd = fd_jacobian(lambda z: np.array([welfare(g, z)]), x)[0]
    np.testing.assert_allclose(welfare_gradient(g, x), fd, rtol=1e-5, atol=1e-6 * np.abs(fd).max())


def test_welfare_gradient_vanishes_at_social_max(social_max):
    assert np.max(np.abs(welfare_gradient(make_osnr(), social_max))) < 1e-8


def test_rhs_zero_at_designed_social_price(social_max):
    g = make_osnr()
    alpha = design_price(g, social_max).alpha
    rhs = price_ode_rhs(g, alpha)
    assert np.max(np.abs(rhs)) < 1e-12


def test_separable_rhs_reduction():
    beta, k = 3.0, 1.0
    g = SeparableLogGame([beta], k)
    for a in (0.1, 0.5, 1.0, 2.0):
        x = beta / (a + k) - 1
        expected = (beta / (1 + x) - k) * (-beta / (a + k) ** 2)
        rhs = price_ode_rhs(g, [a])[0]
        assert rhs == pytest.approx(expected, rel=1e-12)
        assert rhs == pytest.approx(-a * beta / (a + k) ** 2, rel=1e-12)
        # the welfare optimum x = beta/k - 1 needs alpha = 0, so prices fall
        assert rhs < 0


def test_osnr_rhs_is_ascent_direction():
    g = make_osnr()
    rhs = price_ode_rhs(g, ALPHA0)
    assert np.linalg.norm(rhs) > 0
    W0 = welfare(g, osnr_ne(g, ALPHA0))
    W1 = welfare(g, osnr_ne(g, ALPHA0 + 1e3 * rhs))
    assert W1 > W0


@pytest.mark.parametrize("seed", range(4))
def test_fixed_points_are_welfare_stationary(seed, social_max):
    g = make_osnr()
    rng = np.random.default_rng(seed)
    a = rng.uniform(20, 120, 2)
    H = np.linalg.det(g.ne_jacobian(a))
    assert abs(H) > 0
    rhs = price_ode_rhs(g, a)
    grad = welfare_gradient(g, osnr_ne(g, a))
    # nonsingular H: rhs = 0 exactly when the welfare gradient is 0
    assert (np.max(np.abs(rhs)) < 1e-12) == (np.max(np.abs(grad)) < 1e-10)
    a_hat = design_price(g, social_max).alpha
    assert np.max(np.abs(price_ode_rhs(g, a_hat))) < 1e-12
    assert np.max(np.abs(welfare_gradient(g, osnr_ne(g, a_hat)))) < 1e-8


def test_settled_loop_stationary_at_equilibrium(social_max):
    g = make_osnr()
    a_hat = design_price(g, social_max).alpha
    tr = run_pricing_loop(g, a_hat, TwoTimescaleConfig(outer_step=5e4, outer_iters=5), assume_settled=True)
    assert np.max(np.abs(tr.alpha - a_hat)) < 1e-6
    mon = lyapunov_monitor(tr, g)
    assert abs(mon["max_increment"]) <= 1e-12 * abs(mon["V"][0])


def test_full_loop_stationary_at_equilibrium(social_max):
    g = make_osnr()
    a_hat = design_price(g, social_max).alpha
    tr = run_pricing_loop(g, a_hat, TwoTimescaleConfig(**FIXTURE_LOOP), assume_settled=False, x0=social_max)
    assert np.max(np.abs(tr.x - social_max)) < 1e-9
    assert np.max(np.abs(tr.alpha - a_hat)) < 1e-4


def test_separable_loop_matches_oracle():
    g = SeparableLogGame([3.0, 2.0], [1.0, 0.5])
    tr = run_pricing_loop(g, [0.5, 0.5], TwoTimescaleConfig(outer_step=1.0, outer_iters=50), assume_settled=True)
    oracle = brute_welfare_max(g, box=([0.0, 0.0], [10.0, 10.0]))
    assert oracle.converged
    np.testing.assert_allclose(tr.x[-1], oracle.value, atol=1e-5)


def test_settled_fixture_descent():
    g = make_osnr()
    tr = run_pricing_loop(g, ALPHA0, TwoTimescaleConfig(**FIXTURE_LOOP), assume_settled=True)
    mon = lyapunov_monitor(tr, g)
    assert mon["max_increment"] < 1e-6 * abs(mon["V"][0])
    assert not mon["flagged"]


def test_monitor_flags_too_coarse_time_scale():
    # one fast step per price update: the actions never settle and welfare oscillates
    g = make_osnr()
    cfg = TwoTimescaleConfig(epsilon=1.0, dt_fast=5e-5, outer_step=5e4, outer_iters=50)
    tr = run_pricing_loop(g, ALPHA0, cfg, assume_settled=False, x0=X0)
    mon = lyapunov_monitor(tr, g)
    assert mon["flagged"]
    assert mon["relative_increment"] > 1e-4
    assert "W2" in mon


def test_full_loop_divergence_raises():
    g = make_osnr()
    cfg = TwoTimescaleConfig(epsilon=0.01, dt_fast=1e-3, outer_step=5e4, outer_iters=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(DivergenceError):
            run_pricing_loop(g, ALPHA0, cfg, assume_settled=False, x0=X0)


def test_negative_excursions_clamped_and_counted():
    g = SeparableLogGame([3.0], 1.0)
    tr = run_pricing_loop(g, [0.5], TwoTimescaleConfig(outer_step=10.0, outer_iters=3), assume_settled=True)
    assert tr.meta["clamped"] >= 1
    assert np.all(tr.alpha >= 0)


def test_config_defaults_and_validation():
    cfg = TwoTimescaleConfig(epsilon=0.03)
    assert cfg.inner_steps == 33
    with pytest.raises(DomainError):
        TwoTimescaleConfig(epsilon=0.0)
    with pytest.raises(DomainError):
        TwoTimescaleConfig(h_source="guess")


def test_fd_sensitivity_loop_agrees_with_analytic():
    g = make_osnr()
    kw = dict(FIXTURE_LOOP, outer_iters=5)
    a = run_pricing_loop(g, ALPHA0, TwoTimescaleConfig(**kw), assume_settled=True)
    f = run_pricing_loop(g, ALPHA0, TwoTimescaleConfig(h_source="finite-difference", **kw), assume_settled=True)
    np.testing.assert_allclose(f.alpha, a.alpha, rtol=1e-4)


# ---------------------------------------------------------------------------
# penalty pricing


def test_penalty_inactive_inside_region():
    g = WirelessSirGame([1.0, 0.6], 0.1, 16.0, [1.0, 1.0])
    spec = PenaltySpec([1.0, 1.0])
    a = np.array([1.0, 1.0])
    assert np.all(sir_vector(wireless_ne(g, a), g) >= spec.sbar)
    np.testing.assert_array_equal(penalty_price_rhs(g, a, spec), [0.0, 0.0])


def test_penalty_single_player_lowers_price():
    g = WirelessSirGame([1.0], 0.1, 16.0, [1.0])
    spec = PenaltySpec([100.0])
    a = np.array([2.0])
    assert sir_vector(wireless_ne(g, a), g)[0] < 100.0
    assert penalty(g, wireless_ne(g, a), spec)[0] > 0
    assert penalty_price_rhs(g, a, spec)[0] < 0


def test_penalty_loop_reaches_region():
    g = WirelessSirGame([1.0, 0.6], 0.1, 16.0, [1.0, 1.0])
    spec = PenaltySpec([5.0, 5.0])
    a0 = [0.5, 2.0]
    assert np.min(sir_vector(wireless_ne(g, a0), g) - spec.sbar) < 0
    tr = run_penalty_loop(g, a0, spec, max_iter=200)
    assert tr.meta["reached"]
    assert tr.meta["final_gap"] >= -1e-6
    # total penalty is the monitored quantity and never grows
    assert np.all(np.diff(tr.lyapunov) <= 0)
