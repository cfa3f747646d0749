import json

import numpy as np
import pytest

from gamedesign import OpticalOsnrGame, SeparableLogGame, WirelessSirGame
from gamedesign.config import build_game, fixture_path, load_config, parse_config, validate
from gamedesign.errors import ConfigError


def _osnr_doc(**task):
    return {
        "game": {"type": "osnr", "Gamma": [[2.47e-3, 2.61e-3], [2.36e-3, 2.5e-3]], "n0": 4.3e-7, "a": [0.485, 0.48], "beta": [1, 1]},
        "task": {"type": "price-loop", "alpha0": [18.35, 19.23], **task},
    }


def test_shipped_fixture_is_valid():
    assert validate(fixture_path()) == []
    cfg = load_config(fixture_path())
    assert cfg.task["type"] == "reproduce-sec6"
    assert cfg.task["inner_steps"] == 100 and cfg.task["outer_iters"] == 50
    assert cfg.game["n0"] == 4.3e-7
    assert isinstance(build_game(cfg.game), OpticalOsnrGame)


def test_missing_gamma_is_named():
    doc = _osnr_doc()
    del doc["game"]["Gamma"]
    diags = validate(doc)
    assert len(diags) == 1
    assert "game.Gamma" in diags[0]


@pytest.mark.parametrize("eps", [0, -0.1])
def test_nonpositive_epsilon(eps):
    diags = validate(_osnr_doc(epsilon=eps))
    assert any("task.epsilon" in d for d in diags)


def test_diagnostics_carry_line_numbers():
    text = json.dumps(_osnr_doc(epsilon=-1.0), indent=2)
    diags = validate(text)
    line = next(i for i, ln in enumerate(text.splitlines(), 1) if '"epsilon"' in ln)
    assert diags == [f"task.epsilon: must be a positive number (line {line})"]


def test_unknown_types_and_fields():
    assert any("unknown game type" in d for d in validate({"game": {"type": "cournot"}, "task": {"type": "solve", "alpha": 1}}))
    assert any("unknown task type" in d for d in validate({"game": {"type": "separable", "beta": [3]}, "task": {"type": "fly"}}))
    diags = validate(_osnr_doc(speed=3))
    assert any("task.speed" in d and "unknown field" in d for d in diags)


def test_length_mismatch():
    doc = _osnr_doc()
    doc["task"]["alpha0"] = [1.0, 2.0, 3.0]
    assert any("task.alpha0" in d for d in validate(doc))


def test_task_needs_matching_game():
    doc = {"game": {"type": "separable", "beta": [3]}, "task": {"type": "penalty-loop", "alpha0": [1]}}
    assert any("wireless" in d for d in validate(doc))


def test_invalid_json_reports_line():
    diags = validate('{\n  "game": {\n  "type": \n}')
    assert len(diags) == 1 and "line" in diags[0]


def test_unreadable_path(tmp_path):
    assert validate(tmp_path / "missing.json")[0].startswith("config: cannot read")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_parse_raises_with_diagnostics():
    with pytest.raises(ConfigError) as info:
        parse_config(json.dumps(_osnr_doc(outer_iters=0)))
    assert any("task.outer_iters" in d for d in info.value.diagnostics)


def test_manifest_unwraps_to_config():
    doc = _osnr_doc() | {"seed": 4}
    cfg = parse_config(json.dumps({"tool": "gamedesign", "version": "x", "config": doc}))
    assert cfg.seed == 4 and cfg.task == doc["task"]


def test_build_each_game():
    w = build_game({"type": "wireless", "h": [1, 0.6], "sigma2": 0.1, "L": 16, "beta": 1})
    assert isinstance(w, WirelessSirGame) and w.n_players == 2
    s = build_game({"type": "separable", "beta": [3, 2], "k": 1})
    assert isinstance(s, SeparableLogGame)
    q = build_game({"type": "quadratic", "M": [[2, 0], [0, 2]], "r": [1, 1]})
    np.testing.assert_allclose(q.utility.M, 2 * np.eye(2))
    o = build_game({"type": "opaque", "factory": "gamedesign.catalog:SeparableLogGame", "kwargs": {"beta": [3.0], "k": 1.0}})
    assert o.n_players == 1


def test_opaque_factory_errors():
    with pytest.raises(ConfigError):
        build_game({"type": "opaque", "factory": "no_such_module_xyz:f"})
