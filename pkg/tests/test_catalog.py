import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import ALPHA_HAT, X_HAT, make_osnr, random_osnr, random_wireless
from gamedesign import OpticalOsnrGame, SeparableLogGame, WirelessSirGame
from gamedesign.catalog import (
    EquilibriumWarning,
    osnr,
    osnr_H,
    osnr_ne,
    osnr_vector,
    qos_matrix,
    qos_vector,
    separable_ne,
    sir,
    sir_vector,
    to_db,
    wireless_A,
    wireless_ne,
)
from gamedesign.core import kkt_residual, pseudo_gradient
from gamedesign.errors import DomainError, SingularMatrixError


def test_sir_single_player():
    g = WirelessSirGame([1.0], 1.0, 1.0, [1.0])
    assert sir([2.0], g, 0) == pytest.approx(2.0)


def test_sir_two_players():
    g = WirelessSirGame([1.0, 1.0], 1.0, 1.0, [1.0, 1.0])
    assert sir([1.0, 1.0], g, 0) == pytest.approx(0.5)


def test_sir_undefined_without_noise_and_interference():
    g = WirelessSirGame([1.0, 1.0], 0.0, 1.0, [1.0, 1.0])
    with pytest.raises(DomainError):
        sir([1.0, 0.0], g, 0)
    with pytest.raises(DomainError):
        sir([-1.0, 0.0], g, 0)


@given(st.integers(0, 10_000))
def test_sir_qos_identity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    g = random_wireless(rng, n)
    sbar = rng.uniform(0.5, 5.0, n)
    x = rng.uniform(0.0, 3.0, n)
    s = sir_vector(x, g)
    Sx = qos_matrix(g, sbar) @ x
    b = qos_vector(g, sbar)
    # the identity is exact, so only compare away from the rounding band
    clear = np.abs(s - sbar) > 1e-9 * (1 + sbar)
    np.testing.assert_array_equal((s >= sbar)[clear], (Sx >= b)[clear])


def test_wireless_ne_scalar():
    g = WirelessSirGame([1.0], 1.0, 1.0, [2.0])
    np.testing.assert_allclose(wireless_ne(g, [1.0]), [1.0])


def test_wireless_ne_symmetric_two_players():
    g = WirelessSirGame([1.0, 1.0], 0.0, 2.0, [1.0, 1.0])
    np.testing.assert_allclose(wireless_A(g), [[1, 0.5], [0.5, 1]])
    np.testing.assert_allclose(wireless_ne(g, [1.0, 1.0]), [2 / 3, 2 / 3])


@pytest.mark.parametrize("seed", range(5))
def test_wireless_ne_kkt(seed):
    rng = np.random.default_rng(seed)
    g = random_wireless(rng, 4)
    a = rng.uniform(0.3, 1.0, 4)
    x = wireless_ne(g, a)
    assert kkt_residual(g, a, x) < 1e-10


def test_wireless_ne_errors():
    g = WirelessSirGame([1.0, 1.0], 0.1, 2.0, [1.0, 1.0])
    with pytest.raises(DomainError):
        wireless_ne(g, [0.0, 1.0])
    singular = WirelessSirGame([1.0, 1.0], 0.1, 1.0, [1.0, 1.0])
    with pytest.raises(SingularMatrixError):
        wireless_ne(singular, [1.0, 1.0])
    with pytest.warns(EquilibriumWarning):
        wireless_ne(g, [0.2, 20.0])


def test_osnr_reference_point_about_23_db(osnr_game):
    db = to_db(osnr_vector(X_HAT, osnr_game))
    np.testing.assert_allclose(db, 23.0, atol=0.5)
    assert osnr(X_HAT, osnr_game, 0) == pytest.approx(osnr_vector(X_HAT, osnr_game)[0])


def test_osnr_limits():
    g = OpticalOsnrGame([[0.0]], 1e-3, [0.5], [1.0])
    assert osnr([2.0], g, 0) == pytest.approx(2.0 / 1e-3)
    big = OpticalOsnrGame([[2e-3]], 1e6, [0.5], [1.0])
    assert osnr([0.3], big, 0) == pytest.approx(0.3 / 1e6, rel=1e-8)


def test_osnr_ne_reference_prices(osnr_game):
    x = osnr_ne(osnr_game, ALPHA_HAT)
    np.testing.assert_allclose(x, X_HAT, rtol=0.02)


def test_osnr_ne_scalar():
    g = OpticalOsnrGame([[1e-3]], 1e-4, [0.5], [2.0])
    a = 3.0
    assert osnr_ne(g, [a])[0] == pytest.approx((0.5 * 2.0 / (a + 2.0) - 1e-4) / 0.5)
    assert osnr_H(g, [a])[0, 0] == pytest.approx(-2.0 / (a + 2.0) ** 2)


def test_osnr_ne_without_linear_term():
    g = make_osnr(with_linear_term=False)
    a = np.array([40.0, 45.0])
    x = osnr_ne(g, a)
    assert np.max(np.abs(pseudo_gradient(g, a, x))) < 1e-9 * (1 + a.max())
    with pytest.raises(DomainError):
        osnr_ne(g, [0.0, 1.0])


@pytest.mark.parametrize("seed", range(5))
def test_osnr_ne_stationary_random(seed):
    rng = np.random.default_rng(seed)
    g = random_osnr(rng, 3)
    a = rng.uniform(5, 50, 3)
    x = osnr_ne(g, a)
    assert np.max(np.abs(pseudo_gradient(g, a, x))) < 1e-10


def test_osnr_H_reference(osnr_game):
    H = osnr_H(osnr_game, ALPHA_HAT)
    assert np.all(np.isfinite(H))
    assert abs(np.linalg.det(H)) > 0


@given(st.integers(0, 10_000))
def test_osnr_H_is_price_jacobian(seed):
    rng = np.random.default_rng(seed)
    g = random_osnr(rng, int(rng.integers(1, 4)))
    a = rng.uniform(5, 80, g.n_players)
    H = osnr_H(g, a)
    fd = np.empty_like(H)
    for j in range(g.n_players):
        d = 1e-4 * (1 + a[j])
        e = np.zeros(g.n_players)
        e[j] = d
        fd[:, j] = (osnr_ne(g, a + e) - osnr_ne(g, a - e)) / (2 * d)
    np.testing.assert_allclose(fd, H, rtol=1e-5, atol=1e-5 * np.abs(H).max())


def test_osnr_dominance_margin_reference(osnr_game):
    assert osnr_game.dominance_margin() == pytest.approx(0.47764, abs=1e-12)


def test_separable_ne_plug_in():
    g = SeparableLogGame([3.0], 1.0)
    assert separable_ne(g, [1.0])[0] == pytest.approx(0.5)
    g0 = SeparableLogGame([1.0], 0.0)
    assert separable_ne(g0, [1.0])[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        separable_ne(g0, [0.0])


def test_separable_quadratic_sum_foc():
    g = SeparableLogGame([3.0, 2.0], [0.2, 0.1], "quadratic-sum")
    a = np.array([0.5, 0.3])
    x = separable_ne(g, a)
    # scalar stationarity oracle by central differences of the own cost
    for i in range(2):
        def J(t):
            z = x.copy()
            z[i] = t
            return a[i] * np.sum(z**2) - (g.beta[i] * np.log1p(t) - g.k[i] * t)

        h = 1e-6
        assert abs((J(x[i] + h) - J(x[i] - h)) / (2 * h)) < 1e-7


def test_separable_exp_sum_uses_solver():
    g = SeparableLogGame([3.0, 2.0], [0.2, 0.1], "exp-sum", upper=5.0)
    a = np.array([0.05, 0.03])
    x = separable_ne(g, a)
    assert np.max(np.abs(pseudo_gradient(g, a, x))) < 1e-9


@given(st.floats(0.01, 5.0), st.floats(1e-3, 1.0))
def test_separable_ne_decreasing_in_own_price(a, da):
    g = SeparableLogGame([3.0, 2.0], [0.5, 0.2])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EquilibriumWarning)
        x1 = separable_ne(g, [a, 1.0])
        x2 = separable_ne(g, [a + da, 1.0])
    assert x2[0] < x1[0]
    assert x2[1] == x1[1]


def test_constructor_validation():
    with pytest.raises(DomainError):
        WirelessSirGame([1.0, -1.0], 0.1, 1.0, [1.0, 1.0])
    with pytest.raises(DomainError):
        OpticalOsnrGame([[1e-3]], 0.0, [0.5], [1.0])
    with pytest.raises(DomainError):
        SeparableLogGame([-1.0])
