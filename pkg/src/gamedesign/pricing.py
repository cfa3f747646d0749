"""Welfare-seeking price dynamics under limited information.

The designer only observes the equilibrium response ``x* = T(alpha)`` and its
sensitivity ``H = dx*/dalpha``; prices move along ``H^T grad W(x)`` where
``W = sum_i U_i`` is the welfare.  Two regimes are simulated:

* settled: the game is assumed to reach ``T(alpha)`` between price updates;
* full: ``round(1/eps)`` Euler steps of the gradient play per price update.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .catalog import OpticalOsnrGame, WirelessSirGame, qos_matrix, qos_vector, sir_vector, wireless_ne
from .core import GameSpec, as_actions, as_prices, pseudo_gradient
from .design import design_price
from .errors import DivergenceError, DomainError, GameDesignError
from .solver import equilibrium, ne_map_jacobian
from .trajectory import TrajectoryRecorder

__all__ = [
    "TwoTimescaleConfig",
    "PenaltySpec",
    "welfare",
    "welfare_gradient",
    "price_ode_rhs",
    "run_pricing_loop",
    "penalty",
    "penalty_price_rhs",
    "run_penalty_loop",
    "lyapunov_monitor",
]

DIVERGENCE_BOUND = 1e12


@dataclass
class TwoTimescaleConfig:
    """Step sizes of the two loops.

    ``inner_steps`` defaults to ``round(1 / epsilon)``.  ``outer_step`` is
    the Euler step of the price update; in settled mode it is the initial
    trial step of each update and is halved while the welfare would drop.
    """

    epsilon: float = 0.01
    inner_steps: int | None = None
    dt_fast: float = 5e-5
    outer_step: float = 1.0
    outer_iters: int = 50
    h_source: str = "analytic"
    max_halvings: int = 30

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if self.inner_steps is None:
            self.inner_steps = max(1, int(round(1.0 / self.epsilon)))
        if self.inner_steps < 1 or self.outer_iters < 1:
            raise DomainError("iteration counts must be positive")
        if not self.dt_fast > 0 or not self.outer_step > 0:
            raise DomainError("step sizes must be positive")
        if self.h_source not in ("analytic", "finite-difference"):
            raise DomainError(f"unknown h_source {self.h_source!r}")


@dataclass
class PenaltySpec:
    """QoS targets and penalty shape ``f(z) = z^2`` for ``z > 0``, else 0."""

    sbar: np.ndarray
    f_kind: str = "quadratic"

    def __post_init__(self):
        self.sbar = np.asarray(self.sbar, dtype=float)
        if self.f_kind != "quadratic":
            raise DomainError(f"unknown penalty shape {self.f_kind!r}")
        if np.any(self.sbar < 0):
            raise DomainError("target SIR levels must be nonnegative")


def welfare(game: GameSpec, x):
    return float(np.sum(game.utility.values(as_actions(x, game.n_players))))


def welfare_gradient(game: GameSpec, x):
    """``dW/dx_j = sum_i dU_i/dx_j`` including cross terms.

    For the optical game the gradient is split as ``fbar_j - X_j``:
    the own-utility slope minus the marginal harm done to the other
    channels through ``Gamma``.
    """
    x = as_actions(x, game.n_players)
    if isinstance(game, OpticalOsnrGame):
        u = game.utility
        d, e = u._dens(x)
        fbar = u.own_partials(x)
        w = game.beta * (1.0 / e - 1.0 / d)
        off = game.Gamma.copy()
        np.fill_diagonal(off, 0.0)
        X = off.T @ w
        return fbar - X
    return game.utility.jacobian(x).sum(axis=0)


def _sensitivity(game, alpha, h_source, x0=None):
    method = "auto" if h_source == "analytic" else "fd"
    H = ne_map_jacobian(game, alpha, method=method, x0=x0)
    if abs(np.linalg.det(H)) < 1e-12:
        warnings.warn("equilibrium sensitivity H is nearly singular", RuntimeWarning, stacklevel=3)
    return H


def price_ode_rhs(game: GameSpec, alpha, h_source="analytic", x0=None):
    """``alphadot = H(alpha)^T grad W(T(alpha))`` with the game settled at ``T(alpha)``."""
    alpha = as_prices(alpha, game.n_players)
    x = equilibrium(game, alpha, x0)
    H = _sensitivity(game, alpha, h_source, x)
    return H.T @ welfare_gradient(game, x)


def _finite(v):
    return np.all(np.isfinite(v)) and np.linalg.norm(v) <= DIVERGENCE_BOUND


def run_pricing_loop(game: GameSpec, alpha0, cfg: TwoTimescaleConfig | None = None, assume_settled=True, x0=None):
    """Simulate the price dynamics.

    Settled mode steps ``alpha`` by Euler on :func:`price_ode_rhs`, halving
    the step whenever the welfare at the new equilibrium would fall or the
    equilibrium cannot be computed or leaves the strategy box.  Full mode
    alternates ``cfg.inner_steps`` Euler steps of ``xdot = -q(x, alpha)`` with one
    price step that uses the current (unsettled) ``x``; it raises
    :class:`DivergenceError` if the actions blow up or leave the box.

    The ``lyapunov`` column is ``V = -W(x)``.  Negative prices are clamped
    to zero and counted in ``meta["clamped"]``.  ``meta["design_check"]``
    reports whether the terminal point is reachable by a static design.
    """
    cfg = cfg or TwoTimescaleConfig()
    n = game.n_players
    alpha = as_prices(alpha0, n).copy()
    rec = TrajectoryRecorder()
    clamped = 0
    halvings = 0
    stalls = 0

    def clamp(a):
        nonlocal clamped
        if np.any(a < 0):
            clamped += 1
            return np.maximum(a, 0.0)
        return a

    def record(t, x, a):
        W = welfare(game, x)
        rec.append(t, x, a, W, -W, game.metric(x))

    t = 0.0
    if assume_settled:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            x = equilibrium(game, alpha, x0)
            V = -welfare(game, x)
            record(t, x, alpha)
            for _ in range(cfg.outer_iters):
                rhs = _sensitivity(game, alpha, cfg.h_source, x).T @ welfare_gradient(game, x)
                step = cfg.outer_step
                for _h in range(cfg.max_halvings + 1):
                    raw = alpha + step * rhs
                    trial = np.maximum(raw, 0.0)
                    try:
                        x_new = equilibrium(game, trial, x)
                        V_new = -welfare(game, x_new)
                    except GameDesignError:
                        V_new = math.inf
                    valid = math.isfinite(V_new) and game.constraints.contains(x_new, 1e-12)
                    if valid and V_new <= V:
                        clamped += bool(np.any(raw < 0))
                        break
                    step *= 0.5
                    halvings += 1
                else:
                    # no descent step found: the price is (numerically) stationary
                    stalls += 1
                    trial, x_new, V_new = alpha, x, V
                alpha, x, V = trial, x_new, V_new
                t += cfg.outer_step
                record(t, x, alpha)
    else:
        x = equilibrium(game, alpha) if x0 is None else as_actions(x0, n).copy()
        record(t, x, alpha)
        for k in range(cfg.outer_iters):
            for _ in range(cfg.inner_steps):
                x = x - cfg.dt_fast * pseudo_gradient(game, alpha, x)
            if not _finite(x):
                raise DivergenceError(f"actions diverged in outer iteration {k + 1}")
            if not game.constraints.contains(x, 1e-9):
                # unprojected fast flow escaped the strategy set: dt_fast is too coarse
                raise DivergenceError(f"actions left the strategy set in outer iteration {k + 1}")
            H = _sensitivity(game, alpha, cfg.h_source, x)
            alpha = clamp(alpha + cfg.outer_step * (H.T @ welfare_gradient(game, x)))
            if not _finite(alpha):
                raise DivergenceError(f"prices diverged in outer iteration {k + 1}")
            t += cfg.outer_step
            record(t, x, alpha)

    traj = rec.build(
        mode="settled" if assume_settled else "full",
        epsilon=cfg.epsilon,
        inner_steps=cfg.inner_steps,
        clamped=clamped,
        halvings=halvings,
        stalls=stalls,
    )
    x_end, a_end = traj.x[-1], traj.alpha[-1]
    traj.meta["welfare_grad_inf"] = float(np.max(np.abs(welfare_gradient(game, x_end))))
    traj.meta["rhs_inf"] = float(np.max(np.abs(_sensitivity(game, a_end, cfg.h_source, x_end).T @ welfare_gradient(game, x_end))))
    try:
        traj.meta["design_check"] = design_price(game, x_end).to_dict()
    except GameDesignError as exc:
        traj.meta["design_check"] = {"feasible": False, "reason": str(exc)}
    return traj


# ---------------------------------------------------------------------------
# QoS penalty pricing


def penalty(game: WirelessSirGame, x, spec: PenaltySpec):
    """Per-player penalties ``rho_j = f(b_j - (S x)_j)`` (zero once the target is met)."""
    z = qos_vector(game, spec.sbar) - qos_matrix(game, spec.sbar) @ as_actions(x, game.n_players)
    return np.maximum(z, 0.0) ** 2


def _penalty_slopes(game, x, spec):
    # diagonal reading: rho_j is differentiated only through x_j
    S = qos_matrix(game, spec.sbar)
    z = qos_vector(game, spec.sbar) - S @ x
    return -2.0 * np.maximum(z, 0.0) * np.diag(S)


def penalty_price_rhs(game: WirelessSirGame, alpha, spec: PenaltySpec):
    """Descent direction of the total penalty in price space, ``-H^T drho``.

    ``H`` is obtained by central differences of the closed-form
    equilibrium.  Under-served players get a lower price.
    """
    alpha = as_prices(alpha, game.n_players)
    x = wireless_ne(game, alpha)
    H = ne_map_jacobian(game, alpha, method="fd")
    return -H.T @ _penalty_slopes(game, x, spec)


def run_penalty_loop(game: WirelessSirGame, alpha0, spec: PenaltySpec, step=1.0, max_iter=200, tol=1e-6):
    """Iterate the penalty price update until every SIR meets its target.

    The step doubles after each accepted update and is halved while the
    total penalty would increase or a price would leave ``(0, inf)``.
    Stops once ``min_i (s_i - sbar_i) >= -tol``; ``meta["reached"]``
    records whether that happened within ``max_iter`` updates.
    """
    n = game.n_players
    alpha = as_prices(alpha0, n).copy()
    rec = TrajectoryRecorder()

    def gap(x):
        return float(np.min(sir_vector(x, game) - spec.sbar))

    def record(t, x, a):
        rec.append(t, x, a, welfare(game, x), float(np.sum(penalty(game, x, spec))), game.metric(x))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        x = wireless_ne(game, alpha)
        P = float(np.sum(penalty(game, x, spec)))
        record(0.0, x, alpha)
        reached = gap(x) >= -tol
        it = 0
        while not reached and it < max_iter:
            it += 1
            rhs = penalty_price_rhs(game, alpha, spec)
            for _ in range(60):
                trial = alpha + step * rhs
                if np.all(trial > 0):
                    x_new = wireless_ne(game, trial)
                    P_new = float(np.sum(penalty(game, x_new, spec)))
                    if np.all(x_new >= 0) and P_new <= P:
                        break
                step *= 0.5
            else:
                break
            alpha, x, P = trial, x_new, P_new
            step *= 2.0
            record(float(it), x, alpha)
            reached = gap(x) >= -tol
    return rec.build(mode="penalty", reached=bool(reached), iterations=it, final_gap=gap(x))


# ---------------------------------------------------------------------------
# Lyapunov diagnostics


def lyapunov_monitor(trajectory, game: GameSpec, mode=None, rel_tol=1e-8):
    """Check that ``V = -W(x)`` never grows between consecutive samples.

    Returns a dict with the ``V`` series, the largest increase, that
    increase relative to ``|V(0)|`` and a ``flagged`` verdict.  For full
    two-timescale runs the boundary-layer term ``W2 = 0.5 ||q(x, alpha)||^2``
    is reported alongside.
    """
    mode = mode or trajectory.meta.get("mode", "settled")
    V = np.array([-welfare(game, x) for x in trajectory.x])
    inc = np.diff(V)
    max_inc = float(inc.max()) if inc.size else 0.0
    scale = abs(V[0]) if V[0] != 0 else 1.0
    out = {
        "V": V,
        "max_increment": max_inc,
        "relative_increment": max_inc / scale,
        "flagged": bool(max_inc > rel_tol * scale),
    }
    if mode == "full":
        W2 = np.array([0.5 * np.sum(pseudo_gradient(game, a, x) ** 2) for x, a in zip(trajectory.x, trajectory.alpha)])
        out["W2"] = W2
    return out
