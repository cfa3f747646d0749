"""Iterative Nash-equilibrium computation and sampled sufficient-condition checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .core import GameSpec, as_actions, as_prices, jacobian_Q, pseudo_gradient
from .errors import GameDesignError, NonConvergenceError, NumericsError

__all__ = [
    "SolverSettings",
    "SolveResult",
    "CertificateEntry",
    "CertificateReport",
    "solve_ne",
    "projected_residual",
    "equilibrium",
    "certify",
    "ne_map_jacobian",
]


@dataclass(frozen=True)
class SolverSettings:
    """Settings for :func:`solve_ne`.

    ``scaling="curvature"`` divides each player's step by its own curvature
    ``d^2 J_i / dx_i^2`` (a damped Jacobi-Newton step); ``"none"`` is the
    plain map ``x <- Proj(x - step * q(x))``.
    """

    method: str = "projected-pseudo-gradient"
    step: float = 0.1
    tol: float = 1e-10
    max_iter: int = 100_000
    projection: str = "box"
    scaling: str = "curvature"
    penalty_weight: float = 1e6

    def __post_init__(self):
        if self.method not in ("projected-pseudo-gradient", "best-response-sweep"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.step > 0 or not self.tol > 0:
            raise ValueError("step and tol must be positive")
        if self.projection not in ("box", "none"):
            raise ValueError(f"unknown projection {self.projection!r}")
        if self.scaling not in ("curvature", "none"):
            raise ValueError(f"unknown scaling {self.scaling!r}")


@dataclass
class SolveResult:
    x: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter((self.x, self.iterations, self.residual))


def _penalised_q(game, alpha, x, settings):
    q = pseudo_gradient(game, alpha, x)
    extra = game.constraints.extra
    if extra:
        for c in extra:
            viol = max(0.0, float(c.fun(x)))
            if viol > 0:
                q = q + settings.penalty_weight * viol * np.asarray(c.grad(x), dtype=float)
    return q


def projected_residual(game: GameSpec, x, q, projection="box", atol=0.0):
    """Stationarity residual with optimal box multipliers.

    Interior coordinates contribute ``|q_i|``; a coordinate resting on its
    lower (upper) bound only contributes the part of ``q_i`` that pushes
    into the interior.
    """
    q = np.asarray(q, dtype=float)
    if projection == "none":
        return float(np.max(np.abs(q)))
    lo, hi = game.constraints.lower, game.constraints.upper
    r = q.copy()
    at_lo = x <= lo + atol
    at_hi = x >= hi - atol
    r[at_lo] = np.minimum(q[at_lo], 0.0)
    r[at_hi] = np.maximum(q[at_hi], 0.0)
    return float(np.max(np.abs(r)))


def solve_ne(game: GameSpec, alpha, x0=None, settings: SolverSettings | None = None) -> SolveResult:
    """Compute a Nash equilibrium by projected pseudo-gradient play or best-response sweeps.

    Parameters
    ----------
    game : GameSpec
    alpha : array_like
        Price vector.
    x0 : array_like, optional
        Starting point inside the box hull; defaults to the box centre.
    settings : SolverSettings, optional

    Returns
    -------
    SolveResult
        Unpacks as ``(x, iterations, residual)``; ``history`` holds the
        residual after every iteration.

    Raises
    ------
    NonConvergenceError
        When ``max_iter`` is exhausted.  The exception carries the last
        iterate and its residual.
    """
    settings = settings or SolverSettings()
    n = game.n_players
    alpha = as_prices(alpha, n)
    box = game.constraints
    x = box.center() if x0 is None else as_actions(x0, n).copy()
    project = box.project_box if settings.projection == "box" else (lambda z: z)
    x = project(x)
    if settings.method == "best-response-sweep":
        return _best_response_sweeps(game, alpha, x, settings)

    history = []
    step = settings.step
    q = _penalised_q(game, alpha, x, settings)
    res = projected_residual(game, x, q, settings.projection)
    for it in range(1, settings.max_iter + 1):
        if res <= settings.tol:
            return SolveResult(x, it - 1, res, history)
        if settings.scaling == "curvature":
            curv = np.diag(jacobian_Q(game, alpha, x))
            curv = np.where(np.isfinite(curv) & (curv > 0), curv, 1.0)
        else:
            curv = 1.0
        for _ in range(60):
            x_new = project(x - step * q / curv)
            try:
                q_new = _penalised_q(game, alpha, x_new, settings)
                break
            except NumericsError:
                step *= 0.5
        else:
            raise NonConvergenceError("step collapsed while avoiding a non-finite pseudo-gradient", x, res, it)
        x, q = x_new, q_new
        res = projected_residual(game, x, q, settings.projection)
        history.append(res)
        if not math.isfinite(res):
            raise NonConvergenceError("residual became non-finite", x, res, it)
    if res <= settings.tol:
        return SolveResult(x, settings.max_iter, res, history)
    raise NonConvergenceError(
        f"no equilibrium within {settings.max_iter} iterations (residual {res:.3g})", x, res, settings.max_iter
    )


def _best_response_sweeps(game, alpha, x, settings):
    lo, hi = game.constraints.lower, game.constraints.upper
    history = []

    def qi(i, t):
        z = x.copy()
        z[i] = t
        return _penalised_q(game, alpha, z, settings)[i]

    for sweep in range(1, settings.max_iter + 1):
        for i in range(game.n_players):
            ql, qh = qi(i, lo[i]), qi(i, hi[i])
            if ql >= 0:
                x[i] = lo[i]
            elif qh <= 0:
                x[i] = hi[i]
            else:
                x[i] = brentq(lambda t: qi(i, t), lo[i], hi[i], xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
        res = projected_residual(game, x, _penalised_q(game, alpha, x, settings))
        history.append(res)
        if res <= settings.tol:
            return SolveResult(x, sweep, res, history)
    raise NonConvergenceError(f"best-response sweeps did not converge (residual {res:.3g})", x, res, settings.max_iter)


def equilibrium(game: GameSpec, alpha, x0=None, settings: SolverSettings | None = None):
    """The equilibrium map ``T(alpha)``: closed form when the game has one, else :func:`solve_ne`."""
    closed = getattr(game, "nash_equilibrium", None)
    if closed is not None:
        return closed(alpha)
    return solve_ne(game, alpha, x0, settings).x


# ---------------------------------------------------------------------------
# H = d x* / d alpha


def ne_map_jacobian(game: GameSpec, alpha, settings: SolverSettings | None = None, method="auto", x0=None):
    """Sensitivity ``H[i, j] = d x*_i / d alpha_j`` of the equilibrium to prices.

    ``method="auto"`` uses the game's analytic ``ne_jacobian`` when it has
    one and central differences otherwise (``delta_j = 1e-4 (1 + alpha_j)``,
    one-sided when ``alpha_j`` is too close to zero).
    """
    n = game.n_players
    alpha = as_prices(alpha, n)
    if method not in ("auto", "analytic", "fd"):
        raise ValueError(f"unknown method {method!r}")
    if method in ("auto", "analytic"):
        analytic = getattr(game, "ne_jacobian", None)
        H = analytic(alpha) if analytic is not None else None
        if H is not None:
            return H
        if method == "analytic":
            raise ValueError("game has no analytic equilibrium sensitivity")
    x_ref = equilibrium(game, alpha, x0, settings)
    H = np.empty((n, n))
    for j in range(n):
        d = 1e-4 * (1.0 + alpha[j])
        ap = alpha.copy()
        ap[j] += d
        xp = equilibrium(game, ap, x_ref, settings)
        if alpha[j] >= d:
            am = alpha.copy()
            am[j] -= d
            xm = equilibrium(game, am, x_ref, settings)
            H[:, j] = (xp - xm) / (2 * d)
        else:
            H[:, j] = (xp - x_ref) / d
    return H


# ---------------------------------------------------------------------------
# certificates


@dataclass
class CertificateEntry:
    name: str
    holds: bool
    margin: float
    samples: int

    def to_dict(self):
        return {"name": self.name, "holds": self.holds, "margin": self.margin, "samples": self.samples}


@dataclass
class CertificateReport:
    """Sampled evidence for each sufficient condition.

    A positive margin is evidence, not proof: conditions are only checked at
    the sampled points.  Inapplicable conditions carry a NaN margin.
    """

    entries: dict

    def __getitem__(self, name):
        return self.entries[name]

    def applicable(self):
        return {k: e for k, e in self.entries.items() if not math.isnan(e.margin)}

    def all_hold(self):
        return all(e.holds for e in self.applicable().values())

    def to_dict(self):
        return {k: e.to_dict() for k, e in self.entries.items()}


def _samples(lower, upper, n, seed):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    sampler = qmc.Halton(d=lower.size, scramble=True, seed=seed)
    return qmc.scale(sampler.random(n), lower, upper) if np.all(upper > lower) else np.tile(lower, (n, 1))


def certify(
    game: GameSpec,
    alpha,
    n_samples: int = 64,
    seed: int = 0,
    region=None,
    alpha_spread: float = 0.5,
    h_samples: int | None = None,
) -> CertificateReport:
    """Check the existence/uniqueness/stability conditions at low-discrepancy samples.

    Parameters
    ----------
    region : (lower, upper), optional
        Box in which actions are sampled; defaults to the game's box hull.
        Local statements (stability around an operating point) should pass
        a neighbourhood of that point.
    alpha_spread : float
        Prices for the ``Theta_pd`` and ``H_nonsingular`` checks are sampled
        in ``alpha * [1 - spread, 1 + spread]``.
    h_samples : int, optional
        Number of price samples for ``H_nonsingular``; defaults to
        ``n_samples`` with an analytic sensitivity, 8 otherwise.
    """
    n = game.n_players
    alpha = as_prices(alpha, n)
    cs = game.constraints
    lo, hi = (cs.lower, cs.upper) if region is None else (np.asarray(region[0], float), np.asarray(region[1], float))
    xs = _samples(lo, hi, n_samples, seed)
    entries = {}

    def add(name, margin, count):
        margin = float(margin)
        entries[name] = CertificateEntry(name, bool(margin > 0), margin, int(count))

    # Assumption 1: nonempty interior of a bounded set
    box_pts = _samples(cs.lower, cs.upper, n_samples, seed)
    box_pts = np.vstack([cs.center(), box_pts])
    slack = max(float(np.min(-cs.values(p))) for p in box_pts)
    add("Assumption1", slack, len(box_pts))

    Qs = []
    for p in xs:
        try:
            Qs.append(jacobian_Q(game, alpha, p))
        except GameDesignError:
            Qs.append(np.full((n, n), np.nan))
    Qs = np.array(Qs)
    add("Assumption2", np.nanmin(np.diagonal(Qs, axis1=1, axis2=2)) if np.isfinite(Qs).any() else np.nan, len(xs))
    add("Assumption3", _min_sym_eig(Qs), len(xs))

    grads = np.array([np.max(np.abs(cs.gradients(p)), axis=0) for p in xs])
    add("Assumption4", grads.min(), len(xs))

    dom = getattr(game, "dominance_margin", None)
    add("diag_dominance", dom() if dom is not None else np.nan, 1 if dom is not None else 0)

    a_lo = alpha * (1 - alpha_spread)
    a_hi = alpha * (1 + alpha_spread)
    alphas = _samples(a_lo, a_hi, n_samples, seed + 1) if np.any(a_hi > a_lo) else np.tile(alpha, (n_samples, 1))
    thetas = []
    for p, a in zip(xs, alphas):
        try:
            thetas.append(jacobian_Q(game, a, p))
        except GameDesignError:
            thetas.append(np.full((n, n), np.nan))
    add("Theta_pd", _min_sym_eig(np.array(thetas)), len(xs))

    analytic = getattr(game, "ne_jacobian", None) is not None and game.ne_jacobian(alpha) is not None
    m = h_samples if h_samples is not None else (n_samples if analytic else 8)
    h_alphas = np.vstack([alpha, alphas[: max(m - 1, 0)]])
    dets = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for a in h_alphas:
            try:
                dets.append(abs(np.linalg.det(ne_map_jacobian(game, a))))
            except GameDesignError:
                dets.append(np.nan)
    dets = np.array(dets)
    add("H_nonsingular", np.nanmin(dets) if np.isfinite(dets).any() else np.nan, len(h_alphas))
    return CertificateReport(entries)


def _min_sym_eig(Qs):
    vals = [np.linalg.eigvalsh(Q + Q.T)[0] for Q in Qs if np.all(np.isfinite(Q))]
    return min(vals) if vals else np.nan
