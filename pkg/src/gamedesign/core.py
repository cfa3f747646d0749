"""Game abstraction and the differential machinery shared by every module.

A game with ``N`` players is described by two *families* of scalar functions,
the utilities ``U_i(x)`` and the pricing functions ``p_i(x)``, plus a convex
feasible set.  Player ``i`` minimises the cost

    J_i(alpha, x) = alpha_i * p_i(x) - U_i(x)

over its own action ``x_i``.  Families are closed analytic forms so that first
and second partials are exact; :class:`OpaqueFamily` wraps an arbitrary
callable and falls back to finite differences.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError, DomainError, NumericsError

__all__ = [
    "DiffSettings",
    "Family",
    "OpaqueFamily",
    "QuadraticUtility",
    "LogUtility",
    "SirUtility",
    "OsnrUtility",
    "LinearPricing",
    "QuadraticPricing",
    "ExponentialPricing",
    "SumPricing",
    "Constraint",
    "ConstraintSet",
    "GameSpec",
    "PriceClampWarning",
    "as_actions",
    "as_prices",
    "fd_jacobian",
    "cost",
    "costs",
    "pseudo_gradient",
    "jacobian_Q",
    "kkt_residual",
    "drift",
    "control_matrix",
]


class PriceClampWarning(UserWarning):
    """Emitted when a negative price is clamped to zero."""


@dataclass(frozen=True)
class DiffSettings:
    """Finite-difference settings.

    ``fd_step`` is relative: the step for coordinate ``i`` is
    ``fd_step * max(1, |x_i|)``.
    """

    fd_step: float = 1e-6
    scheme: str = "central"

    def __post_init__(self):
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.scheme not in ("central", "forward"):
            raise ValueError(f"unknown fd scheme {self.scheme!r}")


DEFAULT_DIFF = DiffSettings()


def fd_jacobian(fun, x, settings: DiffSettings = DEFAULT_DIFF):
    """Jacobian of a vector function ``fun`` at ``x`` by finite differences.

    Returns an ``(M, N)`` array with entry ``[i, j] = d fun_i / d x_j``.
    """
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(np.asarray(fun(x), dtype=float))
    jac = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = settings.fd_step * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += h
        if settings.scheme == "central":
            xm = x.copy()
            xm[j] -= h
            col = (np.asarray(fun(xp), dtype=float) - np.asarray(fun(xm), dtype=float)) / (2 * h)
        else:
            col = (np.asarray(fun(xp), dtype=float) - f0) / h
        jac[:, j] = col
    if not np.all(np.isfinite(jac)):
        raise NumericsError("finite-difference Jacobian is not finite (too close to a domain boundary?)")
    return jac


# ---------------------------------------------------------------------------
# function families


class Family:
    """A vector of ``N`` scalar functions ``f_i(x)`` with their partials.

    Subclasses implement :meth:`values` and, where available, the analytic
    :meth:`jacobian` and :meth:`own_second`.  Missing derivatives fall back to
    finite differences (first order) or ``None`` (second order, which makes
    :func:`jacobian_Q` difference the pseudo-gradient instead).
    """

    n: int

    def values(self, x):
        raise NotImplementedError

    def jacobian(self, x):
        """``[i, j] = d f_i / d x_j``."""
        return fd_jacobian(self.values, x)

    def own_partials(self, x):
        """``d f_i / d x_i`` for every ``i``."""
        return np.diag(self.jacobian(x)).copy()

    def own_second(self, x):
        """``[i, j] = d^2 f_i / (d x_i d x_j)``, or ``None`` when unknown."""
        return None


class OpaqueFamily(Family):
    """Wraps a callable ``fun(x) -> (N,)``; every derivative is numerical."""

    def __init__(self, fun: Callable, n: int, settings: DiffSettings = DEFAULT_DIFF):
        self.fun = fun
        self.n = int(n)
        self.settings = settings

    def values(self, x):
        return np.asarray(self.fun(np.asarray(x, dtype=float)), dtype=float)

    def jacobian(self, x):
        return fd_jacobian(self.values, x, self.settings)

    def own_second(self, x):
        # 4-point mixed differences; the larger step keeps roundoff at ~eps/h^2
        x = np.asarray(x, dtype=float)
        n = self.n
        h = 0.1 * np.sqrt(self.settings.fd_step) * np.maximum(1.0, np.abs(x))
        out = np.empty((n, n))
        f0 = self.values(x)
        for i in range(n):
            for j in range(n):
                if i == j:
                    e = np.zeros(n)
                    e[i] = h[i]
                    out[i, i] = (self.values(x + e)[i] - 2 * f0[i] + self.values(x - e)[i]) / h[i] ** 2
                    continue
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h[i]
                ej[j] = h[j]
                out[i, j] = (
                    self.values(x + ei + ej)[i]
                    - self.values(x + ei - ej)[i]
                    - self.values(x - ei + ej)[i]
                    + self.values(x - ei - ej)[i]
                ) / (4 * h[i] * h[j])
        return out


class QuadraticUtility(Family):
    """``U_i = r_i x_i - M_ii x_i^2 / 2 - x_i * sum_{j != i} M_ij x_j``.

    With linear pricing this gives the affine pseudo-gradient
    ``q(x) = alpha - r + M x`` and the constant Jacobian ``Q = M``.
    """

    def __init__(self, M, r=None):
        self.M = np.atleast_2d(np.asarray(M, dtype=float))
        self.n = self.M.shape[0]
        if self.M.shape != (self.n, self.n):
            raise DimensionError("M must be square")
        self.r = np.zeros(self.n) if r is None else np.asarray(r, dtype=float)
        if self.r.shape != (self.n,):
            raise DimensionError("r must have length N")

    def values(self, x):
        x = np.asarray(x, dtype=float)
        d = np.diag(self.M)
        return self.r * x - 0.5 * d * x**2 - x * (self.M @ x - d * x)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        jac = -self.M * x[:, None]
        np.fill_diagonal(jac, self.r - self.M @ x)
        return jac

    def own_partials(self, x):
        return self.r - self.M @ np.asarray(x, dtype=float)

    def own_second(self, x):
        return -self.M.copy()


class LogUtility(Family):
    """Separable ``U_i = beta_i log(1 + x_i) - k_i x_i``."""

    def __init__(self, beta, k=None):
        self.beta = np.asarray(beta, dtype=float)
        self.n = self.beta.size
        self.k = np.zeros(self.n) if k is None else np.broadcast_to(np.asarray(k, dtype=float), (self.n,)).copy()

    def values(self, x):
        x = np.asarray(x, dtype=float)
        return self.beta * np.log1p(x) - self.k * x

    def own_partials(self, x):
        return self.beta / (1.0 + np.asarray(x, dtype=float)) - self.k

    def jacobian(self, x):
        return np.diag(self.own_partials(x))

    def own_second(self, x):
        return np.diag(-self.beta / (1.0 + np.asarray(x, dtype=float)) ** 2)


class SirUtility(Family):
    """Wireless uplink utility ``U_i = beta_i log(1 + s_i(x))``.

    ``s_i = L h_i x_i / (sum_{j != i} h_j x_j + sigma2)``.
    """

    def __init__(self, h, sigma2, L, beta):
        self.h = np.asarray(h, dtype=float)
        self.n = self.h.size
        self.sigma2 = float(sigma2)
        self.L = float(L)
        self.beta = np.broadcast_to(np.asarray(beta, dtype=float), (self.n,)).copy()

    def _interference(self, x):
        return self.h @ x - self.h * x + self.sigma2

    def values(self, x):
        x = np.asarray(x, dtype=float)
        interf = self._interference(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.beta * (np.log(interf + self.L * self.h * x) - np.log(interf))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        interf = self._interference(x)
        total = interf + self.L * self.h * x
        with np.errstate(divide="ignore", invalid="ignore"):
            jac = (self.beta * (1.0 / total - 1.0 / interf))[:, None] * self.h[None, :]
        np.fill_diagonal(jac, self.beta * self.L * self.h / total)
        return jac

    def own_partials(self, x):
        x = np.asarray(x, dtype=float)
        total = self._interference(x) + self.L * self.h * x
        return self.beta * self.L * self.h / total

    def own_second(self, x):
        x = np.asarray(x, dtype=float)
        total = self._interference(x) + self.L * self.h * x
        lh = self.L * self.h
        out = -(self.beta * lh / total**2)[:, None] * self.h[None, :]
        np.fill_diagonal(out, -self.beta * lh**2 / total**2)
        return out


class OsnrUtility(Family):
    """Optical OSNR-like utility.

    ``U_i = beta_i log(1 + a_i gamma_i / (1 - Gamma_ii gamma_i)) [- beta_i x_i]``
    where ``gamma_i = x_i / (n0 + sum_j Gamma_ij x_j)``.  Evaluated through
    the equivalent ``beta_i [log D_i - log E_i]`` with
    ``D_i = n0 + (Gamma~ x)_i`` and ``E_i = n0 + sum_{j != i} Gamma_ij x_j``.
    """

    def __init__(self, Gamma, n0, a, beta, with_linear_term=True):
        self.Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
        self.n = self.Gamma.shape[0]
        self.n0 = float(n0)
        self.a = np.asarray(a, dtype=float)
        self.beta = np.broadcast_to(np.asarray(beta, dtype=float), (self.n,)).copy()
        self.with_linear_term = bool(with_linear_term)
        self.Gamma_tilde = self.Gamma.copy()
        np.fill_diagonal(self.Gamma_tilde, self.a)

    def _dens(self, x):
        d = self.n0 + self.Gamma_tilde @ x
        e = self.n0 + self.Gamma @ x - np.diag(self.Gamma) * x
        return d, e

    def values(self, x):
        x = np.asarray(x, dtype=float)
        d, e = self._dens(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self.beta * (np.log(d) - np.log(e))
        if self.with_linear_term:
            u = u - self.beta * x
        return u

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        d, e = self._dens(x)
        jac = (self.beta * (1.0 / d - 1.0 / e))[:, None] * self.Gamma
        np.fill_diagonal(jac, self.own_partials(x))
        return jac

    def own_partials(self, x):
        d, _ = self._dens(np.asarray(x, dtype=float))
        g = self.a * self.beta / d
        if self.with_linear_term:
            g = g - self.beta
        return g

    def own_second(self, x):
        d, _ = self._dens(np.asarray(x, dtype=float))
        out = -(self.a * self.beta / d**2)[:, None] * self.Gamma_tilde
        return out


class LinearPricing(Family):
    """``p_i = x_i``."""

    def __init__(self, n):
        self.n = int(n)

    def values(self, x):
        return np.asarray(x, dtype=float).copy()

    def jacobian(self, x):
        return np.eye(self.n)

    def own_partials(self, x):
        return np.ones(self.n)

    def own_second(self, x):
        return np.zeros((self.n, self.n))


class QuadraticPricing(Family):
    """``p_i = scale * x_i^2``."""

    def __init__(self, n, scale=1.0):
        self.n = int(n)
        self.scale = float(scale)

    def values(self, x):
        return self.scale * np.asarray(x, dtype=float) ** 2

    def own_partials(self, x):
        return 2 * self.scale * np.asarray(x, dtype=float)

    def jacobian(self, x):
        return np.diag(self.own_partials(x))

    def own_second(self, x):
        return 2 * self.scale * np.eye(self.n)


class ExponentialPricing(Family):
    """``p_i = exp(x_i)``."""

    def __init__(self, n):
        self.n = int(n)

    def values(self, x):
        return np.exp(np.asarray(x, dtype=float))

    def own_partials(self, x):
        return np.exp(np.asarray(x, dtype=float))

    def jacobian(self, x):
        return np.diag(self.own_partials(x))

    def own_second(self, x):
        return np.diag(np.exp(np.asarray(x, dtype=float)))


class SumPricing(Family):
    """Aggregate pricing shared by all players.

    kind ``linear-sum``: ``p_i = sum_k x_k``; ``quadratic-sum``:
    ``p_i = sum_k x_k^2``; ``exp-sum``: ``p_i = exp(sum_k x_k)``.
    """

    KINDS = ("linear-sum", "quadratic-sum", "exp-sum")

    def __init__(self, n, kind="linear-sum"):
        if kind not in self.KINDS:
            raise ValueError(f"unknown sum pricing kind {kind!r}")
        self.n = int(n)
        self.kind = kind

    def values(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear-sum":
            v = x.sum()
        elif self.kind == "quadratic-sum":
            v = (x**2).sum()
        else:
            v = np.exp(x.sum())
        return np.full(self.n, v)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear-sum":
            return np.ones((self.n, self.n))
        if self.kind == "quadratic-sum":
            return np.tile(2 * x, (self.n, 1))
        return np.full((self.n, self.n), np.exp(x.sum()))

    def own_partials(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear-sum":
            return np.ones(self.n)
        if self.kind == "quadratic-sum":
            return 2 * x
        return np.full(self.n, np.exp(x.sum()))

    def own_second(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "linear-sum":
            return np.zeros((self.n, self.n))
        if self.kind == "quadratic-sum":
            return 2 * np.eye(self.n)
        return np.full((self.n, self.n), np.exp(x.sum()))


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class Constraint:
    """A scalar convex constraint ``fun(x) <= 0`` with gradient ``grad(x)``."""

    fun: Callable
    grad: Callable
    name: str = ""


class ConstraintSet:
    """Feasible set ``{x : h_j(x) <= 0}`` enclosed in a finite box hull.

    The box bounds are themselves constraints.  They are listed first, in
    the order ``x_i - upper_i`` for every ``i``, then ``lower_i - x_i`` for
    every ``i``, then the extra constraints.  Multiplier arrays for
    :func:`kkt_residual` follow the same order.
    """

    def __init__(self, lower, upper, extra: Sequence[Constraint] = ()):
        self.lower = np.asarray(lower, dtype=float).copy()
        self.upper = np.asarray(upper, dtype=float).copy()
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise DimensionError("lower and upper must be vectors of equal length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise DomainError("box hull must be finite")
        if np.any(self.lower > self.upper):
            raise DomainError("box hull has lower > upper")
        self.extra = tuple(extra)

    @property
    def n(self):
        return self.lower.size

    @property
    def n_constraints(self):
        return 2 * self.n + len(self.extra)

    def values(self, x):
        x = np.asarray(x, dtype=float)
        parts = [x - self.upper, self.lower - x]
        if self.extra:
            parts.append(np.array([float(c.fun(x)) for c in self.extra]))
        return np.concatenate(parts)

    def gradients(self, x):
        """``(r, N)`` array of constraint gradients."""
        x = np.asarray(x, dtype=float)
        rows = [np.eye(self.n), -np.eye(self.n)]
        if self.extra:
            rows.append(np.array([np.asarray(c.grad(x), dtype=float) for c in self.extra]))
        return np.vstack(rows)

    def project_box(self, x):
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, tol=0.0):
        return bool(np.all(self.values(x) <= tol))

    def center(self):
        return 0.5 * (self.lower + self.upper)


# ---------------------------------------------------------------------------
# the game


@dataclass
class GameSpec:
    """A parametric pricing game.

    ``params`` carries named scenario constants for reporting only; the
    families own the numbers that enter the computation.
    """

    n_players: int
    utility: Family
    pricing: Family
    constraints: ConstraintSet
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_players < 1:
            raise DimensionError("n_players must be positive")
        for name, part in (("utility", self.utility), ("pricing", self.pricing), ("constraints", self.constraints)):
            if part.n != self.n_players:
                raise DimensionError(f"{name} has dimension {part.n}, expected {self.n_players}")

    def metric(self, x):
        """Per-player quality metric reported in trajectories (utility by default)."""
        return self.utility.values(x)


def as_actions(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionError(f"action vector has shape {x.shape}, expected ({n},)")
    if not np.all(np.isfinite(x)):
        raise NumericsError("action vector has non-finite entries")
    return x


def as_prices(alpha, n, clamp=True):
    """Validate a price vector; negative entries are clamped with a warning."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (n,):
        raise DimensionError(f"price vector has shape {alpha.shape}, expected ({n},)")
    if not np.all(np.isfinite(alpha)):
        raise NumericsError("price vector has non-finite entries")
    if clamp and np.any(alpha < 0):
        warnings.warn(f"negative prices {alpha[alpha < 0]} clamped to 0", PriceClampWarning, stacklevel=2)
        alpha = np.maximum(alpha, 0.0)
    return alpha


def costs(game: GameSpec, alpha, x):
    """All player costs ``alpha_i p_i(x) - U_i(x)``."""
    n = game.n_players
    alpha = as_prices(alpha, n)
    x = as_actions(x, n)
    return alpha * game.pricing.values(x) - game.utility.values(x)


def cost(game: GameSpec, alpha, x, i):
    if not 0 <= i < game.n_players:
        raise DimensionError(f"player index {i} out of range")
    return float(costs(game, alpha, x)[i])


def pseudo_gradient(game: GameSpec, alpha, x):
    """``q_i(x) = alpha_i dp_i/dx_i - dU_i/dx_i``."""
    n = game.n_players
    alpha = as_prices(alpha, n)
    x = as_actions(x, n)
    q = alpha * game.pricing.own_partials(x) - game.utility.own_partials(x)
    if not np.all(np.isfinite(q)):
        raise NumericsError(f"non-finite pseudo-gradient at x={x}")
    return q


def jacobian_Q(game: GameSpec, alpha, x, settings: DiffSettings | None = None):
    """Jacobian of the pseudo-gradient, ``Q[i, j] = d^2 J_i / (dx_i dx_j)``."""
    n = game.n_players
    alpha = as_prices(alpha, n)
    x = as_actions(x, n)
    u2 = game.utility.own_second(x)
    p2 = game.pricing.own_second(x)
    if u2 is not None and p2 is not None:
        Q = alpha[:, None] * np.asarray(p2) - np.asarray(u2)
        if not np.all(np.isfinite(Q)):
            raise NumericsError(f"non-finite Q at x={x}")
        return Q
    return fd_jacobian(lambda z: pseudo_gradient(game, alpha, z), x, settings or DEFAULT_DIFF)


def kkt_residual(game: GameSpec, alpha, x, multipliers=None):
    """Stationarity plus complementary-slackness violation of the per-player KKT system.

    ``multipliers`` is an ``(N, r)`` array of nonnegative Lagrange
    multipliers ordered as in :class:`ConstraintSet`; ``None`` means all zero.
    """
    n = game.n_players
    q = pseudo_gradient(game, alpha, x)
    r = game.constraints.n_constraints
    phi = np.zeros((n, r)) if multipliers is None else np.asarray(multipliers, dtype=float)
    if phi.shape != (n, r):
        raise DimensionError(f"multipliers must have shape ({n}, {r})")
    if np.any(phi < 0):
        raise DomainError("Lagrange multipliers must be nonnegative")
    grads = game.constraints.gradients(x)  # (r, N)
    h = game.constraints.values(x)
    stationarity = q + np.einsum("ij,ji->i", phi, grads)
    slack = np.abs(phi * h[None, :])
    return float(np.max(np.abs(stationarity)) + (slack.max() if slack.size else 0.0))


def drift(game: GameSpec, x):
    """``f(x)``: own-utility gradients, the uncontrolled part of the gradient play."""
    return game.utility.own_partials(as_actions(x, game.n_players))


def control_matrix(game: GameSpec, x):
    """``G(x) = diag(-dp_i/dx_i)`` so that ``xdot = f(x) + G(x) alpha``."""
    return np.diag(-game.pricing.own_partials(as_actions(x, game.n_players)))
