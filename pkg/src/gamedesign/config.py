"""Scenario configuration: JSON documents describing a game and a task.

A scenario looks like::

    {
      "game": {"type": "osnr", "Gamma": [[...]], "n0": 4.3e-7, "a": [...], "beta": [...]},
      "task": {"type": "price-loop", "alpha0": [...], "epsilon": 0.01, ...},
      "output": "runs/osnr",
      "seed": 0
    }

Units: powers and noise in mW, prices per mW.  :func:`validate` returns
human-readable diagnostics (field path plus the line where the field
appears) and never raises; :func:`load_config` raises :class:`ConfigError`
carrying those diagnostics.
"""

from __future__ import annotations

import importlib
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .catalog import OpticalOsnrGame, SeparableLogGame, WirelessSirGame
from .core import ConstraintSet, GameSpec, LinearPricing, QuadraticUtility
from .errors import ConfigError, GameDesignError

__all__ = ["ScenarioConfig", "load_config", "parse_config", "validate", "build_game", "fixture_path", "GAME_FIELDS", "TASK_FIELDS"]

# required / optional fields per tagged-union member
GAME_FIELDS = {
    "wireless": (("h", "sigma2", "L", "beta"), ("sbar", "upper")),
    "osnr": (("Gamma", "n0", "a", "beta"), ("with_linear_term", "upper")),
    "separable": (("beta",), ("k", "pricing_kind", "upper")),
    "quadratic": (("M",), ("r", "lower", "upper")),
    "opaque": (("factory",), ("kwargs",)),
}

TASK_FIELDS = {
    "solve": (("alpha",), ("x0", "method", "step", "tol", "max_iter")),
    "certify": (("alpha",), ("n_samples", "region", "alpha_spread")),
    "design": (("target",), ()),
    "qos-design": ((), ("sbar",)),
    "regulate": (("target", "x0", "dt", "T"), ("mode", "lambda1", "lambda2", "integrator", "disturbance", "tol", "record_every")),
    "price-loop": (
        ("alpha0",),
        ("x0", "assume_settled", "epsilon", "inner_steps", "dt_fast", "outer_step", "outer_iters", "h_source", "tol"),
    ),
    "penalty-loop": (("alpha0",), ("sbar", "step", "max_iter", "tol")),
    "reproduce-sec6": (
        ("alpha0", "x0"),
        ("epsilon", "inner_steps", "dt_fast", "outer_step", "outer_iters", "h_source", "tol", "certify_region"),
    ),
}

_TOP_LEVEL = {"game", "task", "output", "seed", "description"}


@dataclass
class ScenarioConfig:
    game: dict
    task: dict
    output: str | None = None
    seed: int = 0
    description: str = ""
    source: str = field(default="", repr=False)

    def to_dict(self):
        d = {"game": self.game, "task": self.task, "seed": self.seed}
        if self.output is not None:
            d["output"] = self.output
        if self.description:
            d["description"] = self.description
        return d


def fixture_path(name="optical_two_channel.json"):
    return Path(str(resources.files("gamedesign") / "data" / name))


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _diag(text, path, msg):
    line = _line_of(text, path.split(".")[-1]) if text else None
    where = f" (line {line})" if line else ""
    return f"{path}: {msg}{where}"


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _vec(v):
    if _is_num(v):
        return np.array([float(v)])
    if isinstance(v, list) and v and all(_is_num(e) for e in v):
        return np.array(v, dtype=float)
    return None


def _mat(v):
    if isinstance(v, list) and v and all(isinstance(r, list) for r in v):
        rows = [_vec(r) for r in v]
        if all(r is not None for r in rows) and len({r.size for r in rows}) == 1:
            return np.array(rows)
    return None


def _check_game(g, text, out):
    kind = g.get("type")
    if kind not in GAME_FIELDS:
        out.append(_diag(text, "game.type", f"unknown game type {kind!r}; expected one of {sorted(GAME_FIELDS)}"))
        return None
    req, opt = GAME_FIELDS[kind]
    for k in req:
        if k not in g:
            out.append(_diag(text, "game", f"missing required field 'game.{k}' for {kind} game"))
    for k in g:
        if k not in req and k not in opt and k != "type":
            out.append(_diag(text, f"game.{k}", "unknown field"))
    if any(k not in g for k in req):
        return None
    n = None
    if kind == "osnr":
        G = _mat(g["Gamma"])
        if G is None or G.shape[0] != G.shape[1]:
            out.append(_diag(text, "game.Gamma", "must be a square numeric matrix"))
            return None
        n = G.shape[0]
        for k in ("a", "beta"):
            v = _vec(g[k])
            if v is None or v.size not in (1, n) or np.any(v <= 0):
                out.append(_diag(text, f"game.{k}", f"must be positive, length {n}"))
        if not _is_num(g["n0"]) or g["n0"] <= 0:
            out.append(_diag(text, "game.n0", "must be a positive number (mW)"))
    elif kind == "wireless":
        h = _vec(g["h"])
        if h is None or np.any(h <= 0):
            out.append(_diag(text, "game.h", "must be a positive vector"))
            return None
        n = h.size
        for k in ("sigma2", "L"):
            if not _is_num(g[k]) or g[k] < 0 or (k == "L" and g[k] == 0):
                out.append(_diag(text, f"game.{k}", "must be a nonnegative number" if k == "sigma2" else "must be positive"))
        b = _vec(g["beta"])
        if b is None or b.size not in (1, n) or np.any(b <= 0):
            out.append(_diag(text, "game.beta", f"must be positive, length {n}"))
        if "sbar" in g:
            s = _vec(g["sbar"])
            if s is None or s.size not in (1, n) or np.any(s < 0):
                out.append(_diag(text, "game.sbar", f"must be nonnegative, length {n}"))
    elif kind == "separable":
        b = _vec(g["beta"])
        if b is None or np.any(b <= 0):
            out.append(_diag(text, "game.beta", "must be a positive vector"))
            return None
        n = b.size
        if g.get("pricing_kind", "linear-sum") not in ("linear-sum", "quadratic-sum", "exp-sum"):
            out.append(_diag(text, "game.pricing_kind", "must be linear-sum, quadratic-sum or exp-sum"))
    elif kind == "quadratic":
        M = _mat(g["M"])
        if M is None or M.shape[0] != M.shape[1]:
            out.append(_diag(text, "game.M", "must be a square numeric matrix"))
            return None
        n = M.shape[0]
    elif kind == "opaque":
        if not isinstance(g["factory"], str) or ":" not in g["factory"]:
            out.append(_diag(text, "game.factory", "must be 'module:function'"))
    if "upper" in g and (not _is_num(g["upper"]) or g["upper"] <= 0):
        out.append(_diag(text, "game.upper", "must be a positive number"))
    return n


def _check_vec(t, key, n, text, out, positive=False, nonneg=False):
    if key not in t:
        return
    v = _vec(t[key])
    if v is None or (n is not None and v.size not in (1, n)):
        out.append(_diag(text, f"task.{key}", f"must be a numeric vector of length {n}"))
    elif positive and np.any(v <= 0):
        out.append(_diag(text, f"task.{key}", "entries must be positive"))
    elif nonneg and np.any(v < 0):
        out.append(_diag(text, f"task.{key}", "entries must be nonnegative"))


def _check_task(t, n, game_type, text, out):
    kind = t.get("type")
    if kind not in TASK_FIELDS:
        out.append(_diag(text, "task.type", f"unknown task type {kind!r}; expected one of {sorted(TASK_FIELDS)}"))
        return
    req, opt = TASK_FIELDS[kind]
    for k in req:
        if k not in t:
            out.append(_diag(text, "task", f"missing required field 'task.{k}' for {kind}"))
    for k in t:
        if k not in req and k not in opt and k != "type":
            out.append(_diag(text, f"task.{k}", "unknown field"))
    for k in ("alpha", "alpha0"):
        _check_vec(t, k, n, text, out, nonneg=True)
    for k in ("x0", "target", "sbar", "disturbance"):
        _check_vec(t, k, n, text, out)
    for k in ("lambda1", "lambda2"):
        _check_vec(t, k, n, text, out, positive=True)
    for k in ("epsilon", "dt_fast", "outer_step", "dt", "T", "step", "tol"):
        if k in t and (not _is_num(t[k]) or t[k] <= 0):
            out.append(_diag(text, f"task.{k}", "must be a positive number"))
    for k in ("inner_steps", "outer_iters", "max_iter", "n_samples", "record_every"):
        if k in t and (not isinstance(t[k], int) or isinstance(t[k], bool) or t[k] < 1):
            out.append(_diag(text, f"task.{k}", "must be a positive integer"))
    if "h_source" in t and t["h_source"] not in ("analytic", "finite-difference"):
        out.append(_diag(text, "task.h_source", "must be analytic or finite-difference"))
    if "mode" in t and t["mode"] not in ("steady-state-plus-gain", "integral-augmented"):
        out.append(_diag(text, "task.mode", "must be steady-state-plus-gain or integral-augmented"))
    if t.get("mode") == "integral-augmented" and "lambda2" not in t:
        out.append(_diag(text, "task", "integral-augmented mode needs 'task.lambda2'"))
    if "integrator" in t and t["integrator"] not in ("euler", "rk4"):
        out.append(_diag(text, "task.integrator", "must be euler or rk4"))
    if kind in ("qos-design", "penalty-loop") and game_type not in (None, "wireless"):
        out.append(_diag(text, "task.type", f"{kind} needs a wireless game"))
    if kind == "reproduce-sec6" and game_type not in (None, "osnr"):
        out.append(_diag(text, "task.type", "reproduce-sec6 needs an osnr game"))


def validate(config) -> list:
    """Schema diagnostics for a config (path, JSON text, dict or ScenarioConfig).

    An empty list means the scenario is runnable.
    """
    text = ""
    if isinstance(config, ScenarioConfig):
        text, doc = config.source, config.to_dict()
    elif isinstance(config, dict):
        doc = config
    else:
        try:
            text = _read(config)
        except OSError as exc:
            return [f"config: cannot read ({exc})"]
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            return [f"config: invalid JSON: {exc.msg} (line {exc.lineno})"]
    return _validate_doc(doc, text)


def _validate_doc(doc, text):
    if not isinstance(doc, dict):
        return ["config: top level must be an object"]
    out = []
    for k in doc:
        if k not in _TOP_LEVEL:
            out.append(_diag(text, k, "unknown top-level field"))
    g, t = doc.get("game"), doc.get("task")
    n = game_type = None
    if not isinstance(g, dict):
        out.append("game: missing or not an object")
    else:
        game_type = g.get("type")
        n = _check_game(g, text, out)
    if not isinstance(t, dict):
        out.append("task: missing or not an object")
    else:
        _check_task(t, n, game_type, text, out)
    if "seed" in doc and (not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool)):
        out.append(_diag(text, "seed", "must be an integer"))
    if "output" in doc and not isinstance(doc["output"], str):
        out.append(_diag(text, "output", "must be a path string"))
    return out


def _read(source):
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        return Path(source).read_text()
    return str(source)


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate JSON text; a run manifest is unwrapped to its echoed config."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", [f"config: {exc.msg} (line {exc.lineno})"]) from exc
    if isinstance(doc, dict) and "config" in doc and "tool" in doc:
        doc = doc["config"]
        text = json.dumps(doc, indent=2)
    diags = _validate_doc(doc, text)
    if diags:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(diags), diags)
    return ScenarioConfig(
        game=doc["game"],
        task=doc["task"],
        output=doc.get("output"),
        seed=int(doc.get("seed", 0)),
        description=doc.get("description", ""),
        source=text,
    )


def load_config(source) -> ScenarioConfig:
    try:
        text = _read(source)
    except OSError as exc:
        raise ConfigError(f"cannot read config {source}: {exc}", [f"config: cannot read ({exc})"]) from exc
    return parse_config(text)


def build_game(game: dict) -> GameSpec:
    """Instantiate the game described by a validated ``game`` section."""
    kind = game["type"]
    try:
        if kind == "wireless":
            return WirelessSirGame(game["h"], game["sigma2"], game["L"], game["beta"], game.get("sbar"), game.get("upper", 1e3))
        if kind == "osnr":
            return OpticalOsnrGame(
                game["Gamma"], game["n0"], game["a"], game["beta"], game.get("with_linear_term", True), game.get("upper", 1.0)
            )
        if kind == "separable":
            return SeparableLogGame(game["beta"], game.get("k", 0.0), game.get("pricing_kind", "linear-sum"), game.get("upper", 100.0))
        if kind == "quadratic":
            M = np.asarray(game["M"], dtype=float)
            n = M.shape[0]
            lower = np.broadcast_to(np.asarray(game.get("lower", 0.0), dtype=float), (n,))
            upper = np.broadcast_to(np.asarray(game.get("upper", 10.0), dtype=float), (n,))
            return GameSpec(n, QuadraticUtility(M, game.get("r")), LinearPricing(n), ConstraintSet(lower, upper), {"M": M.tolist()})
        if kind == "opaque":
            mod, _, fn = game["factory"].partition(":")
            factory = getattr(importlib.import_module(mod), fn)
            built = factory(**game.get("kwargs", {}))
            if not isinstance(built, GameSpec):
                raise ConfigError(f"factory {game['factory']} did not return a GameSpec", ["game.factory: wrong return type"])
            return built
    except (ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot import game factory: {exc}", [f"game.factory: {exc}"]) from exc
    except GameDesignError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid game parameters: {exc}", [f"game: {exc}"]) from exc
    raise ConfigError(f"unknown game type {kind!r}", [f"game.type: unknown {kind!r}"])
