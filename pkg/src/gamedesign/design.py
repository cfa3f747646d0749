"""Static design: choose prices that place the equilibrium at a target."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .catalog import WirelessSirGame, qos_matrix, qos_vector, sir_vector, wireless_A, wireless_ne
from .core import GameSpec, as_actions
from .errors import InfeasibleTargetError, SingularMatrixError

__all__ = ["DesignResult", "design_price", "wireless_qos_boundary_price", "ZERO_SENSITIVITY"]

ZERO_SENSITIVITY = 1e-12


@dataclass
class DesignResult:
    alpha: np.ndarray
    feasible: bool
    per_player_sensitivity: np.ndarray
    target: np.ndarray
    reason: str = ""
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "alpha": self.alpha.tolist(),
            "feasible": self.feasible,
            "per_player_sensitivity": self.per_player_sensitivity.tolist(),
            "target": self.target.tolist(),
            "reason": self.reason,
            "notes": list(self.notes),
        }


def design_price(game: GameSpec, x_hat) -> DesignResult:
    """Prices that make ``x_hat`` satisfy every player's first-order condition.

    ``alpha_i = (dU_i/dx_i) / (dp_i/dx_i)`` at ``x_hat``.  The design is
    infeasible when some pricing sensitivity vanishes or when a required
    price is negative; negative prices are reported, not clamped, because a
    clamped price would not put the equilibrium at ``x_hat``.
    """
    x_hat = as_actions(x_hat, game.n_players)
    if not game.constraints.contains(x_hat):
        raise InfeasibleTargetError(f"target {x_hat} lies outside the strategy space")
    notes = []
    cs = game.constraints
    if np.any(x_hat <= cs.lower) or np.any(x_hat >= cs.upper):
        notes.append("target lies on the boundary of the box hull; interior first-order conditions assumed")
    dp = game.pricing.own_partials(x_hat)
    du = game.utility.own_partials(x_hat)
    zero = np.abs(dp) < ZERO_SENSITIVITY
    alpha = np.full(game.n_players, np.nan)
    alpha[~zero] = du[~zero] / dp[~zero]
    if zero.any():
        return DesignResult(alpha, False, dp, x_hat, "zero pricing sensitivity", notes + [f"players {np.flatnonzero(zero).tolist()}"])
    if np.any(alpha < 0):
        neg = np.flatnonzero(alpha < 0).tolist()
        return DesignResult(alpha, False, dp, x_hat, "negative price required", notes + [f"players {neg}"])
    return DesignResult(alpha, True, dp, x_hat, "", notes)


def wireless_qos_boundary_price(game: WirelessSirGame, verify_tol: float = 1e-8) -> DesignResult:
    """Prices placing the wireless equilibrium on the QoS boundary ``S x = b``.

    The boundary point ``x = S^{-1} b`` is mapped through ``c = A x`` and
    ``alpha_i = beta_i / (c_i + sigma2 / (L h_i))``.  The equilibrium is then
    re-solved and its SIRs compared against the targets.
    """
    S = qos_matrix(game)
    b = qos_vector(game)
    try:
        x = np.linalg.solve(S, b)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError("QoS matrix S is singular") from exc
    if np.linalg.cond(S) > 1e14:
        raise SingularMatrixError("QoS matrix S is numerically singular")
    if np.any(x < 0):
        raise InfeasibleTargetError(f"target SIRs {game.sbar} are not jointly achievable (x = {x})")
    c = wireless_A(game) @ x
    denom = c + game.sigma2 / (game.L * game.h)
    if np.any(denom <= 0):
        raise InfeasibleTargetError("boundary point needs a non-positive price denominator")
    alpha = game.beta / denom
    sens = np.ones(game.n_players)
    x_ne = wireless_ne(game, alpha)
    err = float(np.max(np.abs(sir_vector(x_ne, game) - game.sbar)))
    notes = [f"re-solved SIR error {err:.3g}"]
    scale = max(1.0, float(np.max(game.sbar)))
    if not err <= verify_tol * scale:
        return DesignResult(alpha, False, sens, x, "verification failed: re-solved SIRs miss the targets", notes)
    return DesignResult(alpha, True, sens, x, "", notes)
