"""Slow, independent reference computations for tests.

Nothing here uses the pseudo-gradient, the solvers or the analytic
derivatives; only raw utility/pricing evaluations are shared.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import GameSpec, as_actions, as_prices

__all__ = ["OracleResult", "brute_ne", "brute_welfare_max"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OracleResult:
    value: np.ndarray
    residual: float
    iterations: int
    converged: bool = True
    note: str = ""


def _own_cost(game, alpha, x, i, t):
    z = x.copy()
    z[i] = t
    return alpha[i] * game.pricing.values(z)[i] - game.utility.values(z)[i]


def _golden(f, lo, hi, tol):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _polish(f, t, lo, hi, width):
    """Bisect the sign of a five-point slope of ``f`` near the golden-section minimiser."""

    def slope(s):
        # O(h^4) stencil, so h can be large enough to swamp rounding in f
        h = 1e-3 * (abs(s) + 1e-3)
        if s > lo:
            h = min(h, 0.4 * (s - lo))
        return (8 * (f(s + h) - f(s - h)) - (f(s + 2 * h) - f(s - 2 * h))) / (12 * h)

    a, b = max(lo, t - width), min(hi, t + width)
    sa, sb = slope(a) if a > lo else -1.0, slope(b) if b < hi else 1.0
    if not (sa < 0 < sb):
        return t
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if slope(m) < 0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def brute_ne(game: GameSpec, alpha, x0=None, max_sweeps=2000, tol=1e-11, stall_sweeps=50):
    """Cyclic exact best responses, one golden-section search per player.

    Each player minimises its own cost over its box interval with the
    others frozen.  Sweeps stop once no coordinate moves by more than
    ``tol * (1 + |x|)``; each golden-section result is refined by bisecting
    the sign of a finite-difference slope of the cost.  If the sweep-to-sweep
    movement stops shrinking for ``stall_sweeps`` sweeps the run is reported
    as cycling.
    """
    n = game.n_players
    alpha = as_prices(alpha, n, clamp=False)
    lo, hi = game.constraints.lower, game.constraints.upper
    x = game.constraints.center() if x0 is None else as_actions(x0, n).copy()
    best_move = math.inf
    since_best = 0
    move = math.inf
    for sweep in range(1, max_sweeps + 1):
        move = 0.0
        for i in range(n):
            def f(t, i=i):
                return _own_cost(game, alpha, x, i, t)

            span = hi[i] - lo[i]
            t = _golden(f, lo[i], hi[i], 1e-9 * span)
            t = _polish(f, t, lo[i], hi[i], 1e-6 * span + 1e-12)
            move = max(move, abs(t - x[i]) / (1.0 + abs(t)))
            x[i] = t
        if move <= tol:
            return OracleResult(x, move, sweep)
        if move < 0.5 * best_move:
            best_move, since_best = move, 0
        else:
            since_best += 1
            if since_best >= stall_sweeps:
                return OracleResult(x, move, sweep, False, "best responses cycle; equilibrium may not be unique")
    return OracleResult(x, move, max_sweeps, False, "sweep budget exhausted")


def brute_welfare_max(game: GameSpec, box=None, x0=None, tol=1e-10, max_iter=20_000):
    """Projected gradient ascent on ``W = sum_i U_i`` with Armijo backtracking.

    The gradient is the column sum of the utility Jacobian.  The residual is
    the projected gradient's sup-norm.  Once welfare differences sink to
    rounding level a step is accepted if the slope along the search
    direction is still nonnegative at the new point.  A line search that
    cannot find ascent before the residual is small is flagged as a
    concavity failure.  Pass ``box`` to restrict the search to a region
    where the welfare is concave.
    """
    n = game.n_players
    if box is None:
        lo, hi = game.constraints.lower, game.constraints.upper
    else:
        lo, hi = np.asarray(box[0], dtype=float), np.asarray(box[1], dtype=float)
    x = 0.5 * (lo + hi) if x0 is None else np.clip(as_actions(x0, n), lo, hi)

    def W(z):
        return float(np.sum(game.utility.values(z)))

    def grad(z):
        return np.asarray(game.utility.jacobian(z), dtype=float).sum(axis=0)

    def pres(z, g):
        r = g.copy()
        r[(z <= lo) & (g < 0)] = 0.0
        r[(z >= hi) & (g > 0)] = 0.0
        return float(np.max(np.abs(r)))

    step = 1.0
    w, g = W(x), grad(x)
    for it in range(1, max_iter + 1):
        res = pres(x, g)
        if res < tol:
            return OracleResult(x, res, it - 1)
        for _ in range(200):
            z = np.clip(x + step * g, lo, hi)
            wz = W(z)
            if np.isfinite(wz) and wz >= w + 1e-4 * g @ (z - x):
                break
            if np.isfinite(wz) and abs(wz - w) <= 1e-13 * (1.0 + abs(w)) and grad(z) @ (z - x) >= 0:
                break
            step *= 0.5
        else:
            return OracleResult(x, res, it, False, "line search failed; welfare may not be concave here")
        if np.array_equal(z, x):
            return OracleResult(x, res, it, False, "ascent stalled at machine precision")
        x, w, g = z, wz, grad(z)
        step *= 2.0
    return OracleResult(x, pres(x, g), max_iter, False, "iteration budget exhausted")
