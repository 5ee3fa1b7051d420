import numpy as np
import pytest

from volterra_imc.config import bundled_config, format_config, load_config, parse_config, parse_polynomial
from volterra_imc.errors import ConfigError
from volterra_imc.plant_models import eval_derivative, van_de_vusse


def test_bundled_config_matches_builtin_model(rng):
    cfg = load_config(bundled_config())
    ref, op = van_de_vusse()
    assert cfg.operating_point == op
    assert cfg.system.state_names == ("C_A", "C_B")
    for _ in range(10):
        x, u = rng.normal(size=2), rng.normal()
        np.testing.assert_allclose(eval_derivative(cfg.system, x, u), eval_derivative(ref, x, u), rtol=1e-14)


def test_format_round_trip():
    sys, op = van_de_vusse()
    cfg = parse_config(format_config(sys, op))
    assert cfg.system.f.rows == sys.f.rows and cfg.system.g.rows == sys.g.rows
    assert cfg.operating_point == op


@pytest.mark.parametrize("text,expected", [
    ("3*x^2 - y", {(2, 0): 3.0, (0, 1): -1.0}),
    ("-x*y + 2.5e-1", {(1, 1): -1.0, (0, 0): 0.25}),
    ("x + x", {(1, 0): 2.0}),
    ("- -x", {(1, 0): 1.0}),
    (".5*y*y", {(0, 2): 0.5}),
])
def test_parse_polynomial(text, expected):
    assert parse_polynomial(text, ["x", "y"]) == expected


@pytest.mark.parametrize("text,line,col", [
    ("[system]\nstates = x\nf.x = -x + $\ng.x = 1\noutput = x\n", 3, 12),
    ("[system]\nstates = x\nf.x = -z\noutput = x\n", 3, 8),
    ("[system]\nstates = x\nf.x = -x^1.5\noutput = x\n", 3, 9),
    ("[bogus]\n", 1, 1),
    ("states = x\n", 1, 1),
])
def test_parse_errors_carry_position(text, line, col):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "cfg.toy")
    assert (info.value.line, info.value.column) == (line, col)
    assert f"cfg.toy:{line}:{col}" in str(info.value)


def test_scenario_section():
    text = "[system]\nstates = x\nf.x = -x\ng.x = 1\noutput = x\n[scenario]\nlambda = 0.05\nmodel_orders = 1, 2\n"
    cfg = parse_config(text)
    assert cfg.scenario.lam == 0.05 and cfg.scenario.model_orders == (1, 2)
    with pytest.raises(ConfigError):
        parse_config(text.replace("lambda", "lamda"))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toy")
