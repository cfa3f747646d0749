import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gamedesign import OpticalOsnrGame, SeparableLogGame, WirelessSirGame
from gamedesign.core import ConstraintSet, GameSpec, LinearPricing, QuadraticUtility

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

GAMMA = [[2.47e-3, 2.61e-3], [2.36e-3, 2.5e-3]]
A_GAIN = [0.485, 0.48]
N0 = 4.3e-7
X_HAT = np.array([0.0134, 0.0128])
ALPHA_HAT = np.array([73.4, 76.9])
ALPHA0 = np.array([18.35, 19.23])
X0 = np.array([4.3e-4, 4.3e-4])


def make_osnr(**kw):
    return OpticalOsnrGame(GAMMA, N0, A_GAIN, [1.0, 1.0], **kw)


def neg_square_game(n=2, upper=10.0):
    """``U_i = -x_i^2`` with linear pricing on ``[-upper, upper]^n``."""
    return GameSpec(n, QuadraticUtility(2 * np.eye(n), np.zeros(n)), LinearPricing(n), ConstraintSet(-np.full(n, upper), np.full(n, upper)))


def random_osnr(rng, n):
    """Diagonally dominant optical instance with ``Gamma_ij`` of a few 1e-3."""
    G = rng.uniform(1e-3, 4e-3, (n, n))
    a = rng.uniform(0.4, 0.6, n)
    return OpticalOsnrGame(G, N0, a, rng.uniform(0.5, 2.0, n))


def random_wireless(rng, n, L=None):
    L = float(n * 4) if L is None else L
    return WirelessSirGame(rng.uniform(0.5, 2.0, n), rng.uniform(0.05, 0.2), L, rng.uniform(1.0, 3.0, n), upper=100.0)


@pytest.fixture
def osnr_game():
    return make_osnr()


@pytest.fixture
def sep_game():
    return SeparableLogGame([3.0], 1.0)


@pytest.fixture(autouse=True)
def _quiet_equilibrium_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        yield


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES = {}


def record_acceptance(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
