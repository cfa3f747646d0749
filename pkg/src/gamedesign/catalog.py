"""Concrete games with closed-form structure.

* :class:`WirelessSirGame` -- single-cell uplink power control, SIR utility,
  linear pricing.
* :class:`OpticalOsnrGame` -- optical link power control, OSNR utility,
  linear pricing.
* :class:`SeparableLogGame` -- ``U_i = beta_i log(1 + x_i) - k_i x_i`` with an
  aggregate (sum) pricing term.

Units follow the optical scenario: powers and noise in mW, prices in 1/mW.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import brentq

from .core import (
    ConstraintSet,
    GameSpec,
    LinearPricing,
    LogUtility,
    OsnrUtility,
    SirUtility,
    SumPricing,
    as_actions,
    as_prices,
)
from .errors import DimensionError, DomainError, SingularMatrixError

__all__ = [
    "EquilibriumWarning",
    "WirelessSirGame",
    "OpticalOsnrGame",
    "SeparableLogGame",
    "sir",
    "sir_vector",
    "qos_matrix",
    "qos_vector",
    "wireless_A",
    "wireless_ne",
    "osnr",
    "osnr_vector",
    "osnr_ne",
    "osnr_H",
    "separable_ne",
    "to_db",
]


class EquilibriumWarning(UserWarning):
    """A closed-form equilibrium falls outside the model's validity region."""


def to_db(v):
    return 10.0 * np.log10(v)


def _solve(M, rhs, what):
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"{what} is singular") from exc
    if np.linalg.cond(M) > 1e14:
        raise SingularMatrixError(f"{what} is numerically singular (cond={np.linalg.cond(M):.3g})")
    return sol


class WirelessSirGame(GameSpec):
    """Uplink power control: ``J_i = alpha_i x_i - beta_i log(1 + s_i(x))``.

    Parameters
    ----------
    h : array_like
        Channel gains, all positive.
    sigma2 : float
        Noise power.
    L : float
        Spreading gain.
    beta : array_like
        Utility weights.
    sbar : array_like, optional
        Target SIR levels for QoS scenarios.
    upper : float
        Upper edge of the box hull ``[0, upper]^N``.
    """

    def __init__(self, h, sigma2, L, beta, sbar=None, upper=1e3):
        h = np.asarray(h, dtype=float)
        if h.ndim != 1 or np.any(h <= 0):
            raise DomainError("channel gains must be a positive vector")
        if L <= 0:
            raise DomainError("spreading gain L must be positive")
        if sigma2 < 0:
            raise DomainError("noise power must be nonnegative")
        n = h.size
        beta = np.broadcast_to(np.asarray(beta, dtype=float), (n,)).copy()
        if np.any(beta <= 0):
            raise DomainError("beta must be positive")
        self.h = h
        self.sigma2 = float(sigma2)
        self.L = float(L)
        self.beta = beta
        self.sbar = None if sbar is None else np.broadcast_to(np.asarray(sbar, dtype=float), (n,)).copy()
        if self.sbar is not None and np.any(self.sbar < 0):
            raise DomainError("target SIR levels must be nonnegative")
        super().__init__(
            n_players=n,
            utility=SirUtility(h, sigma2, L, beta),
            pricing=LinearPricing(n),
            constraints=ConstraintSet(np.zeros(n), np.full(n, float(upper))),
            params={"h": h.tolist(), "sigma2": self.sigma2, "L": self.L, "beta": beta.tolist()},
        )

    def nash_equilibrium(self, alpha):
        return wireless_ne(self, alpha)

    def metric(self, x):
        return to_db(sir_vector(x, self))


class OpticalOsnrGame(GameSpec):
    """Optical power control with OSNR utility and linear pricing.

    ``with_linear_term`` adds ``-beta_i x_i`` to the utility, which gives the
    welfare function a unique interior maximum.
    """

    def __init__(self, Gamma, n0, a, beta, with_linear_term=True, upper=1.0):
        Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
        n = Gamma.shape[0]
        if Gamma.shape != (n, n):
            raise DimensionError("Gamma must be square")
        if np.any(Gamma < 0):
            raise DomainError("Gamma must be nonnegative")
        a = np.broadcast_to(np.asarray(a, dtype=float), (n,)).copy()
        beta = np.broadcast_to(np.asarray(beta, dtype=float), (n,)).copy()
        if np.any(a <= 0) or np.any(beta <= 0):
            raise DomainError("a and beta must be positive")
        if n0 <= 0:
            raise DomainError("input noise n0 must be positive")
        self.Gamma = Gamma
        self.n0 = float(n0)
        self.a = a
        self.beta = beta
        self.with_linear_term = bool(with_linear_term)
        self.Gamma_tilde = Gamma.copy()
        np.fill_diagonal(self.Gamma_tilde, a)
        super().__init__(
            n_players=n,
            utility=OsnrUtility(Gamma, n0, a, beta, with_linear_term),
            pricing=LinearPricing(n),
            constraints=ConstraintSet(np.zeros(n), np.full(n, float(upper))),
            params={
                "Gamma": Gamma.tolist(),
                "n0": self.n0,
                "a": a.tolist(),
                "beta": beta.tolist(),
                "with_linear_term": self.with_linear_term,
            },
        )

    def dominance_margin(self):
        """``min_i (a_i - sum_{j != i} Gamma_ij)``; positive means Gamma~ is row dominant."""
        off = self.Gamma.sum(axis=1) - np.diag(self.Gamma)
        return float(np.min(self.a - off))

    def nash_equilibrium(self, alpha):
        return osnr_ne(self, alpha)

    def ne_jacobian(self, alpha):
        return osnr_H(self, alpha)

    def metric(self, x):
        return to_db(osnr_vector(x, self))


class SeparableLogGame(GameSpec):
    """``J_i = alpha_i p(x) - beta_i log(1 + x_i) + k_i x_i`` with a sum pricing.

    ``pricing_kind`` is one of ``linear-sum``, ``quadratic-sum``, ``exp-sum``.
    """

    def __init__(self, beta, k=0.0, pricing_kind="linear-sum", upper=100.0):
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        n = beta.size
        k = np.broadcast_to(np.asarray(k, dtype=float), (n,)).copy()
        if np.any(beta <= 0):
            raise DomainError("beta must be positive")
        if np.any(k < 0):
            raise DomainError("k must be nonnegative")
        self.beta = beta
        self.k = k
        self.pricing_kind = pricing_kind
        super().__init__(
            n_players=n,
            utility=LogUtility(beta, k),
            pricing=SumPricing(n, pricing_kind),
            constraints=ConstraintSet(np.zeros(n), np.full(n, float(upper))),
            params={"beta": beta.tolist(), "k": k.tolist(), "pricing_kind": pricing_kind},
        )

    def nash_equilibrium(self, alpha):
        return separable_ne(self, alpha)

    def ne_jacobian(self, alpha):
        alpha = as_prices(alpha, self.n_players)
        if self.pricing_kind == "linear-sum":
            return np.diag(-self.beta / (alpha + self.k) ** 2)
        if self.pricing_kind == "quadratic-sum":
            # implicit differentiation of 2 alpha x = beta/(1+x) - k
            x = separable_ne(self, alpha)
            return np.diag(-2 * x / (2 * alpha + self.beta / (1 + x) ** 2))
        return None


# ---------------------------------------------------------------------------
# wireless


def sir(x, game: WirelessSirGame, i):
    """SIR of player ``i``: ``L h_i x_i / (sum_{j != i} h_j x_j + sigma2)``."""
    x = as_actions(x, game.n_players)
    if np.any(x < 0):
        raise DomainError("powers must be nonnegative")
    interf = game.h @ x - game.h[i] * x[i] + game.sigma2
    if interf <= 0:
        raise DomainError("zero noise and zero interference: SIR undefined")
    return float(game.L * game.h[i] * x[i] / interf)


def sir_vector(x, game: WirelessSirGame):
    return np.array([sir(x, game, i) for i in range(game.n_players)])


def wireless_A(game: WirelessSirGame):
    """``A_ij = h_j / (L h_i)`` off the diagonal, ones on it."""
    A = game.h[None, :] / (game.L * game.h[:, None])
    np.fill_diagonal(A, 1.0)
    return A


def qos_matrix(game: WirelessSirGame, sbar=None):
    """``S`` with ``h_i`` on the diagonal and ``-h_j sbar_i / L`` elsewhere."""
    sbar = game.sbar if sbar is None else np.asarray(sbar, dtype=float)
    if sbar is None:
        raise DomainError("target SIR levels sbar are required")
    S = -np.outer(sbar, game.h) / game.L
    np.fill_diagonal(S, game.h)
    return S


def qos_vector(game: WirelessSirGame, sbar=None):
    """``b_i = sbar_i sigma2 / L``."""
    sbar = game.sbar if sbar is None else np.asarray(sbar, dtype=float)
    if sbar is None:
        raise DomainError("target SIR levels sbar are required")
    return sbar * game.sigma2 / game.L


def wireless_ne(game: WirelessSirGame, alpha):
    """Inner Nash equilibrium from ``A x* = c``, ``c_i = beta_i/alpha_i - sigma2/(L h_i)``."""
    alpha = as_prices(alpha, game.n_players)
    if np.any(alpha <= 0):
        raise DomainError("wireless equilibrium needs strictly positive prices")
    c = game.beta / alpha - game.sigma2 / (game.L * game.h)
    x = _solve(wireless_A(game), c, "matrix A")
    if np.any(x < 0):
        warnings.warn(f"equilibrium has negative powers {x}; outside model validity", EquilibriumWarning, stacklevel=2)
    return x


# ---------------------------------------------------------------------------
# optical


def osnr(x, game: OpticalOsnrGame, i):
    """``gamma_i = x_i / (n0 + sum_j Gamma_ij x_j)``."""
    x = as_actions(x, game.n_players)
    if np.any(x < 0):
        raise DomainError("powers must be nonnegative")
    return float(x[i] / (game.n0 + game.Gamma[i] @ x))


def osnr_vector(x, game: OpticalOsnrGame):
    x = as_actions(x, game.n_players)
    return x / (game.n0 + game.Gamma @ x)


def _osnr_C(game, alpha):
    if game.with_linear_term:
        return game.a * game.beta / (alpha + game.beta) - game.n0
    if np.any(alpha <= 0):
        raise DomainError("without the linear utility term prices must be strictly positive")
    return game.a * game.beta / alpha - game.n0


def osnr_ne(game: OpticalOsnrGame, alpha):
    """``x* = Gamma~^{-1} C(alpha)``."""
    alpha = as_prices(alpha, game.n_players)
    if game.dominance_margin() <= 0:
        warnings.warn("diagonal dominance a_i > sum_{j!=i} Gamma_ij fails", EquilibriumWarning, stacklevel=2)
    x = _solve(game.Gamma_tilde, _osnr_C(game, alpha), "Gamma~")
    if np.any(x < 0):
        warnings.warn(f"equilibrium has negative powers {x}; outside model validity", EquilibriumWarning, stacklevel=2)
    return x


def osnr_H(game: OpticalOsnrGame, alpha):
    """Price sensitivity of the equilibrium, ``d x* / d alpha``."""
    alpha = as_prices(alpha, game.n_players)
    if game.with_linear_term:
        d = -game.a * game.beta / (alpha + game.beta) ** 2
    else:
        if np.any(alpha <= 0):
            raise DomainError("without the linear utility term prices must be strictly positive")
        d = -game.a * game.beta / alpha**2
    return _solve(game.Gamma_tilde, np.diag(d), "Gamma~")


# ---------------------------------------------------------------------------
# separable


def separable_ne(game: SeparableLogGame, alpha):
    """Nash equilibrium of the separable log game.

    Linear-sum pricing has the closed form ``beta_i / (alpha_i + k_i) - 1``;
    quadratic-sum pricing solves ``2 alpha_i x = beta_i/(1+x) - k_i`` per
    player; exp-sum pricing couples the players and goes through the
    iterative solver.
    """
    alpha = as_prices(alpha, game.n_players)
    if game.pricing_kind == "exp-sum":
        from .solver import solve_ne

        return solve_ne(game, alpha).x
    if np.any(alpha + game.k <= 0):
        raise DomainError("alpha_i + k_i must be positive")
    if game.pricing_kind == "linear-sum":
        x = game.beta / (alpha + game.k) - 1.0
    else:
        x = np.empty(game.n_players)
        for i in range(game.n_players):
            b, k, a = game.beta[i], game.k[i], alpha[i]

            def foc(t):
                return b / (1.0 + t) - k - 2.0 * a * t

            lo = -1.0 + 1e-12
            hi = 1.0
            while foc(hi) > 0:
                hi *= 2.0
            x[i] = brentq(foc, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if np.any(x < 0):
        warnings.warn(f"equilibrium has negative actions {x}; outside model validity", EquilibriumWarning, stacklevel=2)
    return x
