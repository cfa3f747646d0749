"""Gradient-play dynamics, local reachability and set-point regulation by pricing.

Players following their own cost gradients give

    xdot = f(x) + G(x) alpha,   f_i = dU_i/dx_i,   G = diag(-dp_i/dx_i),

and the designer closes the loop with ``alpha = c(x_hat) + K (x - x_hat)``
(optionally ``+ K_I sigma`` with ``sigmadot = x - x_hat``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import GameSpec, as_actions, control_matrix, drift, jacobian_Q, pseudo_gradient
from .errors import DesignError, DivergenceError, DomainError, SingularMatrixError
from .trajectory import TrajectoryRecorder

__all__ = [
    "ControllerSpec",
    "LinearizedPlant",
    "ReachabilityResult",
    "game_flow",
    "steady_state_price",
    "linearize",
    "regulation_gain",
    "closed_loop_matrix",
    "regulate",
    "reachability_rank",
    "lie_bracket",
]

DIVERGENCE_BOUND = 1e12


@dataclass
class ControllerSpec:
    """Regulation design.

    ``mode`` is ``"steady-state-plus-gain"`` (proportional) or
    ``"integral-augmented"``.  ``lambda1`` are the closed-loop proportional
    pole magnitudes, ``lambda2`` the integral coefficients; scalars are
    broadcast per channel.
    """

    target: np.ndarray
    lambda1: np.ndarray | float = 1.0
    lambda2: np.ndarray | float | None = None
    mode: str = "steady-state-plus-gain"

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float)
        n = self.target.size
        self.lambda1 = np.broadcast_to(np.asarray(self.lambda1, dtype=float), (n,)).copy()
        if np.any(self.lambda1 <= 0):
            raise DomainError("lambda1 entries must be positive")
        if self.mode not in ("steady-state-plus-gain", "integral-augmented"):
            raise DomainError(f"unknown controller mode {self.mode!r}")
        if self.mode == "integral-augmented":
            if self.lambda2 is None:
                raise DomainError("integral mode needs lambda2")
            self.lambda2 = np.broadcast_to(np.asarray(self.lambda2, dtype=float), (n,)).copy()
            if np.any(self.lambda2 <= 0):
                raise DomainError("lambda2 entries must be positive")


@dataclass
class LinearizedPlant:
    A_lin: np.ndarray
    B_lin: np.ndarray


def _rk4(rhs, t, z, dt):
    k1 = rhs(t, z)
    k2 = rhs(t + dt / 2, z + dt / 2 * k1)
    k3 = rhs(t + dt / 2, z + dt / 2 * k2)
    k4 = rhs(t + dt, z + dt * k3)
    return z + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _step(rhs, t, z, dt, integrator):
    if integrator == "euler":
        return z + dt * rhs(t, z)
    if integrator == "rk4":
        return _rk4(rhs, t, z, dt)
    raise ValueError(f"unknown integrator {integrator!r}")


def _price_source(alpha_source, dt):
    """Normalise constant / callable / series price inputs to ``alpha(t, x)``."""
    if callable(alpha_source):
        return alpha_source
    arr = np.asarray(alpha_source, dtype=float)
    if arr.ndim == 1:
        return lambda t, x: arr
    # piecewise-constant series, one row per step
    return lambda t, x: arr[min(int(round(t / dt)), arr.shape[0] - 1)]


def game_flow(game: GameSpec, alpha_source, x0, dt, T, integrator="euler", record_every=1, disturbance=None):
    """Integrate ``xdot_i = -dJ_i/dx_i`` for a price input.

    Parameters
    ----------
    alpha_source : array_like or callable
        Constant prices ``(N,)``, a series ``(steps, N)`` applied piecewise
        constant, or a feedback law ``alpha(t, x)``.
    disturbance : array_like, optional
        Constant additive term on ``xdot``.

    The ``lyapunov`` column records ``0.5 * ||q(x)||^2``.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    n = game.n_players
    x = as_actions(x0, n).copy()
    law = _price_source(alpha_source, dt)
    d = np.zeros(n) if disturbance is None else np.asarray(disturbance, dtype=float)
    clamped = 0

    def prices(t, z):
        nonlocal clamped
        a = np.asarray(law(t, z), dtype=float)
        if np.any(a < 0):
            clamped += 1
            a = np.maximum(a, 0.0)
        return a

    def rhs(t, z):
        return -pseudo_gradient(game, prices(t, z), z) + d

    steps = int(round(T / dt))
    rec = TrajectoryRecorder()

    def record(t, z):
        a = np.maximum(np.asarray(law(t, z), dtype=float), 0.0)
        q = pseudo_gradient(game, a, z)
        rec.append(t, z, a, game.utility.values(z).sum(), 0.5 * q @ q, game.metric(z))

    record(0.0, x)
    for k in range(steps):
        t = k * dt
        x = _step(rhs, t, x, dt, integrator)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_BOUND:
            raise DivergenceError(f"state diverged at t={t + dt:.6g}")
        if (k + 1) % record_every == 0 or k + 1 == steps:
            record((k + 1) * dt, x)
    return rec.build(mode="game-flow", integrator=integrator, dt=dt, clamped=clamped)


def steady_state_price(game: GameSpec, x_hat):
    """Solve ``0 = f(x_hat) + G(x_hat) c`` for the holding price ``c``."""
    x_hat = as_actions(x_hat, game.n_players)
    G = control_matrix(game, x_hat)
    if np.min(np.abs(np.diag(G))) < 1e-12:
        raise SingularMatrixError("G(x_hat) is singular: some pricing sensitivity vanishes")
    return np.linalg.solve(G, -drift(game, x_hat))


def linearize(game: GameSpec, x_hat):
    """Linear plant of the gradient play around ``(x_hat, c(x_hat))``.

    ``A_lin = -Q(x_hat)`` evaluated at the holding price, which reduces to
    ``df/dx`` for linear pricing; ``B_lin = G(x_hat)``.
    """
    c = steady_state_price(game, x_hat)
    return LinearizedPlant(A_lin=-jacobian_Q(game, c, x_hat), B_lin=control_matrix(game, x_hat))


def regulation_gain(plant: LinearizedPlant, spec: ControllerSpec):
    """Pole placement for an invertible input matrix.

    Returns ``(K, K_I)`` with ``A + B K = -diag(lambda1)`` and, in integral
    mode, ``B K_I = -diag(lambda2)`` so that every channel has characteristic
    polynomial ``s^2 + lambda1 s + lambda2``.  ``K_I`` is None in
    proportional mode.
    """
    A, B = np.asarray(plant.A_lin, float), np.asarray(plant.B_lin, float)
    if np.linalg.matrix_rank(B) < B.shape[0]:
        raise SingularMatrixError("input matrix B is singular")
    K = np.linalg.solve(B, -np.diag(spec.lambda1) - A)
    K_I = None
    if spec.mode == "integral-augmented":
        K_I = np.linalg.solve(B, -np.diag(spec.lambda2))
    eig = np.linalg.eigvals(closed_loop_matrix(plant, K, K_I))
    if np.max(eig.real) >= 0:
        raise DesignError(f"closed loop is not stable: eigenvalues {eig}")
    return K, K_I


def closed_loop_matrix(plant: LinearizedPlant, K, K_I=None):
    A, B = np.asarray(plant.A_lin, float), np.asarray(plant.B_lin, float)
    if K_I is None:
        return A + B @ K
    n = A.shape[0]
    return np.block([[A + B @ K, B @ K_I], [np.eye(n), np.zeros((n, n))]])


def regulate(game: GameSpec, spec: ControllerSpec, x0, dt, T, integrator="euler", record_every=1, disturbance=None):
    """Closed-loop simulation under ``alpha = c(x_hat) + K (x - x_hat) [+ K_I sigma]``.

    The ``lyapunov`` column holds ``0.5 * ||x - x_hat||^2``; ``meta`` holds
    the gains and ``final_error = ||x(T) - x_hat||``.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    n = game.n_players
    x_hat = as_actions(spec.target, n)
    c = steady_state_price(game, x_hat)
    K, K_I = regulation_gain(linearize(game, x_hat), spec)
    integral = K_I is not None
    d = np.zeros(n) if disturbance is None else np.asarray(disturbance, dtype=float)
    clamped = 0

    def price(z):
        nonlocal clamped
        a = c + K @ (z[:n] - x_hat)
        if integral:
            a = a + K_I @ z[n:]
        if np.any(a < 0):
            clamped += 1
            a = np.maximum(a, 0.0)
        return a

    def rhs(t, z):
        xdot = -pseudo_gradient(game, price(z), z[:n]) + d
        if integral:
            return np.concatenate([xdot, z[:n] - x_hat])
        return xdot

    z = as_actions(x0, n).copy()
    if integral:
        z = np.concatenate([z, np.zeros(n)])
    rec = TrajectoryRecorder()

    def record(t, z):
        x = z[:n]
        e = x - x_hat
        rec.append(t, x, price(z), game.utility.values(x).sum(), 0.5 * e @ e, game.metric(x))

    record(0.0, z)
    steps = int(round(T / dt))
    for k in range(steps):
        z = _step(rhs, k * dt, z, dt, integrator)
        if not np.all(np.isfinite(z)) or np.linalg.norm(z[:n]) > DIVERGENCE_BOUND:
            raise DivergenceError(f"closed loop diverged at t={(k + 1) * dt:.6g}")
        if (k + 1) % record_every == 0 or k + 1 == steps:
            record((k + 1) * dt, z)
    return rec.build(
        mode="regulate",
        controller=spec.mode,
        K=K.tolist(),
        K_I=None if K_I is None else K_I.tolist(),
        steady_state_price=c.tolist(),
        final_error=float(np.linalg.norm(z[:n] - x_hat)),
        integral_state=None if not integral else z[n:].tolist(),
        clamped=clamped,
    )


# ---------------------------------------------------------------------------
# reachability


def _jac(field_fn, x, h):
    n = x.size
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        cols.append((field_fn(x + e) - field_fn(x - e)) / (2 * h))
    return np.column_stack(cols)


def lie_bracket(X, Y, h_rel=1e-4):
    """``[X, Y](x) = DY(x) X(x) - DX(x) Y(x)`` with central-difference Jacobians."""

    def bracket(x):
        h = h_rel * (1.0 + np.linalg.norm(x))
        return _jac(Y, x, h) @ X(x) - _jac(X, x, h) @ Y(x)

    return bracket


@dataclass
class ReachabilityResult:
    rank: int
    singular_values: np.ndarray
    vectors: np.ndarray
    labels: list
    depth: int


def reachability_rank(game: GameSpec, alpha0, x0, depth=0, rel_tol=1e-8):
    """Numerical rank of the accessibility distribution at ``x0``.

    depth 0 uses the input fields ``g_i``; depth 1 adds ``[f, g_i]`` and
    ``[g_i, g_j]``; depth 2 adds ``ad_f^2 g_i``.  The drift is
    ``f(x) + G(x) alpha0``.
    """
    if depth not in (0, 1, 2):
        raise ValueError("depth must be 0, 1 or 2")
    n = game.n_players
    x0 = as_actions(x0, n)
    alpha0 = np.asarray(alpha0, dtype=float)

    def f(x):
        return drift(game, x) + control_matrix(game, x) @ alpha0

    gs = [(lambda x, i=i: control_matrix(game, x)[:, i]) for i in range(n)]
    fields = [(f"g{i + 1}", g) for i, g in enumerate(gs)]
    if depth >= 1:
        fields += [(f"[f,g{i + 1}]", lie_bracket(f, g)) for i, g in enumerate(gs)]
        fields += [(f"[g{i + 1},g{j + 1}]", lie_bracket(gs[i], gs[j])) for i in range(n) for j in range(i + 1, n)]
    if depth >= 2:
        fields += [(f"ad_f^2 g{i + 1}", lie_bracket(f, lie_bracket(f, g))) for i, g in enumerate(gs)]
    vecs = np.column_stack([fn(x0) for _, fn in fields])
    sv = np.linalg.svd(vecs, compute_uv=False)
    top = sv[0] if sv.size else 0.0
    if top == 0.0:
        rank = 0
    else:
        keep = sv > rel_tol * top
        rank = int(keep.sum())
        if 0 < rank < sv.size and sv[rank - 1] < 10 * sv[rank]:
            warnings.warn("singular-value gap below 10x; numerical rank is ill-determined", RuntimeWarning, stacklevel=2)
    return ReachabilityResult(rank, sv, vecs, [lbl for lbl, _ in fields], depth)
