"""Command line entry point: ``gamedesign run|validate|reproduce``.

Exit codes: 0 success, 1 configuration error, 2 non-convergence or
infeasible design, 3 certificate failure under ``--strict``.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import WirelessSirGame
from .config import ScenarioConfig, build_game, fixture_path, load_config, validate
from .control import ControllerSpec, regulate
from .core import kkt_residual, pseudo_gradient
from .design import design_price, wireless_qos_boundary_price
from .errors import ConfigError, DivergenceError, GameDesignError, InfeasibleTargetError, NonConvergenceError
from .pricing import PenaltySpec, TwoTimescaleConfig, lyapunov_monitor, run_pricing_loop, run_penalty_loop, welfare
from .solver import SolverSettings, certify, equilibrium, solve_ne
from .trajectory import TrajectoryRecorder

__all__ = ["main", "run_scenario", "EXIT_OK", "EXIT_CONFIG", "EXIT_NONCONVERGED", "EXIT_CERTIFICATE"]

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_CERTIFICATE = 0, 1, 2, 3


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _dump(obj, path):
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _point(game, x, alpha):
    """Single-row trajectory for tasks that produce a state, not a time series."""
    rec = TrajectoryRecorder()
    q = pseudo_gradient(game, alpha, x)
    rec.append(0.0, x, alpha, welfare(game, x), 0.5 * q @ q, game.metric(x))
    return rec.build(mode="point")


def _loop_config(task):
    keys = ("epsilon", "inner_steps", "dt_fast", "outer_step", "outer_iters", "h_source")
    return TwoTimescaleConfig(**{k: task[k] for k in keys if k in task})


def _price_converged(traj, tol):
    if len(traj) < 2:
        return True, 0.0
    a1, a0 = traj.alpha[-1], traj.alpha[-2]
    change = float(np.max(np.abs(a1 - a0)) / max(1.0, float(np.max(np.abs(a1)))))
    return change < tol, change


def _certificate(game, alpha, task, seed):
    region = task.get("region", task.get("certify_region"))
    kw = {"n_samples": task.get("n_samples", 100), "seed": seed}
    if region is not None:
        kw["region"] = (np.asarray(region[0], float), np.asarray(region[1], float))
    if "alpha_spread" in task:
        kw["alpha_spread"] = task["alpha_spread"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return certify(game, alpha, **kw)


def _run_task(cfg: ScenarioConfig, seed):
    """Returns ``(exit_code, report, trajectory_or_None, certify_alpha_or_None)``."""
    game = build_game(cfg.game)
    task = cfg.task
    kind = task["type"]
    report = {"task": kind, "game": cfg.game["type"], "n_players": game.n_players}
    code = EXIT_OK

    if kind == "solve":
        alpha = np.asarray(task["alpha"], float) * np.ones(game.n_players)
        settings = SolverSettings(
            method=task.get("method", "projected-pseudo-gradient"),
            **{k: task[k] for k in ("step", "tol", "max_iter") if k in task},
        )
        try:
            res = solve_ne(game, alpha, task.get("x0"), settings)
            x = res.x
            report.update(verdict="converged", iterations=res.iterations, residual=res.residual)
        except NonConvergenceError as exc:
            x = exc.last_iterate
            report.update(verdict="not-converged", iterations=exc.iterations, residual=exc.residual, reason=str(exc))
            code = EXIT_NONCONVERGED
        report["kkt_residual"] = kkt_residual(game, alpha, x)
        traj = _point(game, x, alpha)
        return code, report, traj, alpha

    if kind == "certify":
        alpha = np.asarray(task["alpha"], float) * np.ones(game.n_players)
        cert = _certificate(game, alpha, task, seed)
        report.update(verdict="certified" if cert.all_hold() else "not-certified", certificates=cert.to_dict())
        return code, report, None, alpha

    if kind == "design":
        try:
            res = design_price(game, task["target"])
        except InfeasibleTargetError as exc:
            report.update(verdict="infeasible", reason=str(exc))
            return EXIT_NONCONVERGED, report, None, None
        report.update(verdict="feasible" if res.feasible else "infeasible", design=res.to_dict(), reason=res.reason)
        if not res.feasible:
            return EXIT_NONCONVERGED, report, None, None
        x = equilibrium(game, res.alpha)
        report["recovered_error"] = float(np.max(np.abs(x - res.target)))
        return code, report, _point(game, x, res.alpha), res.alpha

    if kind == "qos-design":
        if not isinstance(game, WirelessSirGame):
            raise ConfigError("qos-design needs a wireless game")
        if "sbar" in task:
            game.sbar = np.asarray(task["sbar"], float) * np.ones(game.n_players)
        if game.sbar is None:
            raise ConfigError("qos-design needs target SIRs in game.sbar or task.sbar", ["task.sbar: missing"])
        try:
            res = wireless_qos_boundary_price(game)
        except (InfeasibleTargetError, GameDesignError) as exc:
            report.update(verdict="infeasible", reason=str(exc))
            return EXIT_NONCONVERGED, report, None, None
        report.update(verdict="feasible" if res.feasible else "infeasible", design=res.to_dict(), reason=res.reason)
        if not res.feasible:
            return EXIT_NONCONVERGED, report, None, None
        x = equilibrium(game, res.alpha)
        return code, report, _point(game, x, res.alpha), res.alpha

    if kind == "regulate":
        spec = ControllerSpec(task["target"], task.get("lambda1", 1.0), task.get("lambda2"), task.get("mode", "steady-state-plus-gain"))
        try:
            traj = regulate(
                game,
                spec,
                task["x0"],
                task["dt"],
                task["T"],
                task.get("integrator", "euler"),
                task.get("record_every", 1),
                task.get("disturbance"),
            )
        except DivergenceError as exc:
            report.update(verdict="diverged", reason=str(exc))
            return EXIT_NONCONVERGED, report, None, None
        err = traj.meta["final_error"]
        ok = err < task.get("tol", 1e-6)
        report.update(verdict="converged" if ok else "not-converged", final_error=err, gains={"K": traj.meta["K"], "K_I": traj.meta["K_I"]})
        return (EXIT_OK if ok else EXIT_NONCONVERGED), report, traj, np.asarray(traj.meta["steady_state_price"])

    if kind in ("price-loop", "reproduce-sec6"):
        loop = _loop_config(task)
        settled = bool(task.get("assume_settled", False)) if kind == "price-loop" else False
        try:
            traj = run_pricing_loop(game, task["alpha0"], loop, assume_settled=settled, x0=task.get("x0"))
        except DivergenceError as exc:
            report.update(verdict="diverged", reason=str(exc))
            return EXIT_NONCONVERGED, report, None, None
        ok, change = _price_converged(traj, task.get("tol", 1e-3))
        mon = lyapunov_monitor(traj, game)
        report.update(
            verdict="converged" if ok else "not-converged",
            last_relative_price_change=change,
            lyapunov={"max_increment": mon["max_increment"], "relative_increment": mon["relative_increment"], "flagged": mon["flagged"]},
            welfare_grad_inf=traj.meta["welfare_grad_inf"],
            design_check=traj.meta["design_check"],
            clamped=traj.meta["clamped"],
            halvings=traj.meta["halvings"],
        )
        if kind == "reproduce-sec6":
            cert = _certificate(game, traj.alpha[-1], task, 0)
            report["certificates"] = cert.to_dict()
            report["metric_db"] = traj.metric[-1].tolist()
        return (EXIT_OK if ok else EXIT_NONCONVERGED), report, traj, traj.alpha[-1]

    if kind == "penalty-loop":
        if not isinstance(game, WirelessSirGame):
            raise ConfigError("penalty-loop needs a wireless game")
        sbar = task.get("sbar", None if game.sbar is None else game.sbar.tolist())
        if sbar is None:
            raise ConfigError("penalty-loop needs target SIRs", ["task.sbar: missing"])
        spec = PenaltySpec(np.asarray(sbar, float) * np.ones(game.n_players))
        traj = run_penalty_loop(game, task["alpha0"], spec, task.get("step", 1.0), task.get("max_iter", 200), task.get("tol", 1e-6))
        ok = traj.meta["reached"]
        report.update(verdict="reached" if ok else "not-reached", final_gap=traj.meta["final_gap"], iterations=traj.meta["iterations"])
        return (EXIT_OK if ok else EXIT_NONCONVERGED), report, traj, traj.alpha[-1]

    raise ConfigError(f"unknown task {kind!r}")


def run_scenario(cfg: ScenarioConfig, out_dir, strict=False, seed=None, fmt="csv"):
    """Run one scenario and write ``trajectory.csv``, ``report.json`` and ``manifest.json``.

    Returns ``(exit_code, report)``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if seed is None else int(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        code, report, traj, alpha = _run_task(cfg, seed)
    if strict:
        if "certificates" not in report and alpha is not None:
            report["certificates"] = _certificate(build_game(cfg.game), alpha, cfg.task, seed).to_dict()
        certs = report.get("certificates")
        if certs is None:
            report["strict"] = "no price to certify"
        else:
            failed = sorted(k for k, e in certs.items() if not (isinstance(e["margin"], float) and math.isnan(e["margin"])) and not e["holds"])
            report["strict"] = {"failed": failed}
            if failed and code == EXIT_OK:
                code = EXIT_CERTIFICATE
    report["exit_code"] = code
    artifacts = ["report.json", "manifest.json"]
    if traj is not None:
        report["final"] = traj.final()
        if fmt == "csv":
            traj.to_csv(out / "trajectory.csv")
            artifacts.append("trajectory.csv")
    report["artifacts"] = sorted(artifacts)
    _dump(report, out / "report.json")
    manifest = {
        "tool": "gamedesign",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": seed,
        "strict": bool(strict),
        "config": cfg.to_dict() | {"seed": seed},
    }
    _dump(manifest, out / "manifest.json")
    return code, report


def _run_one(path, out_dir, args):
    try:
        cfg = load_config(path)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"{path}: {d}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, report = run_scenario(cfg, out_dir, args.strict, args.seed, args.format)
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"{path}: {d}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{path}: {report['task']} -> {report.get('verdict', 'done')} (exit {code}); results in {out_dir}")
    return code


def _cmd_run(args):
    src = Path(args.config)
    if src.is_dir():
        configs = sorted(src.glob("*.json"))
        if not configs:
            print(f"{src}: no *.json configs", file=sys.stderr)
            return EXIT_CONFIG
        base = Path(args.out or "out")
        with ThreadPoolExecutor() as pool:
            codes = list(pool.map(lambda p: _run_one(p, base / p.stem, args), configs))
        return max(codes)
    out = args.out
    if out is None:
        try:
            out = load_config(src).output or "out"
        except ConfigError:
            out = "out"
    return _run_one(src, out, args)


def _cmd_validate(args):
    src = Path(args.config)
    paths = sorted(src.glob("*.json")) if src.is_dir() else [src]
    worst = EXIT_OK
    for p in paths:
        diags = validate(p)
        if diags:
            worst = EXIT_CONFIG
            for d in diags:
                print(f"{p}: {d}")
        else:
            print(f"{p}: ok")
    return worst


def _cmd_reproduce(args):
    return _run_one(fixture_path(), args.out or "reproduce", args)


def build_parser():
    p = argparse.ArgumentParser(prog="gamedesign", description="Price design and pricing dynamics for noncooperative games")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", metavar="DIR", help="output directory")
        sp.add_argument("--strict", action="store_true", help="fail (exit 3) when a sufficient condition is not certified")
        sp.add_argument("--seed", type=int, default=None, metavar="N", help="seed for certificate sampling")
        sp.add_argument("--format", choices=["csv"], default="csv", help="trajectory format")

    r = sub.add_parser("run", help="run a scenario config, or every *.json in a directory concurrently")
    r.add_argument("config")
    common(r)
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    rp = sub.add_parser("reproduce", help="run the shipped two-channel optical scenario")
    common(rp)
    rp.set_defaults(func=_cmd_reproduce)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
