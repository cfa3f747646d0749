import numpy as np
import pytest

from conftest import ALPHA_HAT, X_HAT, make_osnr, random_wireless
from gamedesign import SeparableLogGame
from gamedesign.catalog import osnr_ne, separable_ne, wireless_ne
from gamedesign.core import ConstraintSet, GameSpec, LinearPricing, QuadraticUtility
from gamedesign.oracles import brute_ne, brute_welfare_max


def test_brute_ne_separable_closed_form():
    g = SeparableLogGame([3.0, 2.5, 4.0], [1.0, 0.5, 2.0])
    a = np.array([1.0, 0.3, 0.2])
    res = brute_ne(g, a)
    assert res.converged
    np.testing.assert_allclose(res.value, separable_ne(g, a), atol=1e-9)


def test_brute_ne_osnr_reference_instance():
    g = make_osnr()
    res = brute_ne(g, ALPHA_HAT, x0=[4.3e-4, 4.3e-4])
    assert res.converged
    np.testing.assert_allclose(res.value, osnr_ne(g, ALPHA_HAT), atol=1e-8)
    # the reference prices place the equilibrium at the reference powers
    np.testing.assert_allclose(res.value, X_HAT, rtol=5e-3)


@pytest.mark.parametrize("seed", range(5))
def test_brute_ne_two_player_wireless(seed):
    rng = np.random.default_rng(seed)
    g = random_wireless(rng, 2)
    a = rng.uniform(0.1, 1.0, 2)
    res = brute_ne(g, a)
    assert res.converged
    np.testing.assert_allclose(res.value, wireless_ne(g, a), atol=1e-8)


def test_brute_ne_reports_residual():
    res = brute_ne(SeparableLogGame([3.0], 1.0), [1.0])
    assert np.isfinite(res.residual) and res.residual <= 1e-11
    assert res.iterations >= 1


def test_brute_ne_detects_cycling():
    # best responses x_1 = x_2 and x_2 = -x_1 rotate the profile without shrinking it
    M = np.array([[1.0, -1.0], [1.0, 1.0]])
    g = GameSpec(2, QuadraticUtility(M, np.zeros(2)), LinearPricing(2), ConstraintSet([-1.0, -1.0], [1.0, 1.0]))
    res = brute_ne(g, [0.0, 0.0], x0=[0.3, 0.1], max_sweeps=200)
    assert not res.converged
    assert res.note


def test_welfare_max_separable():
    res = brute_welfare_max(SeparableLogGame([3.0], 1.0))
    assert res.converged
    assert res.value[0] == pytest.approx(2.0, abs=1e-9)
    assert res.residual < 1e-10


def test_welfare_max_quadratic_returns_center():
    c = np.array([0.7, -1.2, 2.5])
    # U_i = -(x_i - c_i)^2 summed gives -||x - c||^2
    g = GameSpec(3, QuadraticUtility(2 * np.eye(3), 2 * c), LinearPricing(3), ConstraintSet(-5 * np.ones(3), 5 * np.ones(3)))
    res = brute_welfare_max(g)
    assert res.converged
    np.testing.assert_allclose(res.value, c, atol=1e-10)


def test_welfare_max_osnr_near_reference_point():
    res = brute_welfare_max(make_osnr(), box=([0.005, 0.005], [0.03, 0.03]))
    assert res.converged
    np.testing.assert_allclose(res.value, X_HAT, rtol=0.02)


def test_welfare_max_flags_boundary_escape_without_box():
    # the optical welfare is not globally concave: unrestricted ascent leaves the interior
    res = brute_welfare_max(make_osnr())
    assert not np.allclose(res.value, X_HAT, rtol=0.02)
