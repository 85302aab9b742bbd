#!/usr/bin/env python
# -*- coding: utf-8 -*-

import pytest

from src.cli.presets import load_preset, preset_names, preset_text
from src.core.exceptions import ConfigurationError
from src.utils.config_parser import config_from_text, load_config, parse_text, serialize_config
from src.utils.utils import format_number, parse_float_list, strip_comment

SAMPLE = """
# короткий прогон
[mesh]
dimension = 1
contact = right
subdivisions_x = 2

[scheme]
T = 0.1
dt = 0.01   ; десять шагов
"""


def _error(text: str, overrides=None) -> ConfigurationError:
    with pytest.raises(ConfigurationError) as info:
        config_from_text(text, overrides)
    return info.value


def test_parse_sample():
    config = config_from_text(SAMPLE)
    assert config.mesh.dimension == 1
    assert config.mesh.contact == ("right",)
    assert config.scheme.n_steps == 10
    assert config.contact.friction == "first-order"


def test_parser_records_lines():
    parsed = parse_text(SAMPLE)
    assert parsed.values["scheme"] == {"T": "0.1", "dt": "0.01"}
    assert parsed.line_of(("scheme", "dt")) == 10
    assert parsed.line_of(("mesh", "unknown")) == 3


def test_syntax_errors_carry_line_numbers():
    assert _error("[mesh\n").line == 1
    assert _error("[mesh]\ndimension 2\n").line == 2
    assert _error("dimension = 2\n").line == 1
    assert _error("[mesh]\n[mesh]\n").line == 2
    assert _error("[mesh]\ndimension = 1\ndimension = 2\n").key == "mesh.dimension"


def test_unknown_section():
    error = _error("[solver]\nfoo = 1\n")
    assert error.line == 1


def test_unknown_key():
    error = _error("[mesh]\ndimension = 2\nfoo = 1\n")
    assert error.key == "mesh.foo"
    assert error.line == 3


def test_invalid_value_cites_key():
    error = _error("[scheme]\nT = 0.1\ndt = -1\n")
    assert error.key == "scheme.dt"
    assert error.line == 3


def test_non_integral_step_count_cites_dt():
    error = _error("[scheme]\nT = 0.1\ndt = 0.03\n")
    assert error.key == "scheme.dt"
    assert error.line == 3
    assert "scheme.dt" in str(error)


def test_overrides_applied_before_validation():
    config = config_from_text(SAMPLE, {"scheme.dt": "0.05", "contact.friction": "regularized"})
    assert config.scheme.n_steps == 2
    assert config.contact.friction == "regularized"
    assert _error(SAMPLE, {"solver.dt": "1"}).key == "solver.dt"
    with pytest.raises(ValueError):
        config_from_text(SAMPLE, {"dt": "1"})


def test_serialized_config_parses_back():
    for name in preset_names():
        config = load_preset(name)
        assert config_from_text(serialize_config(config)) == config


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SAMPLE, encoding="utf-8")
    assert load_config(path, {"scheme.T": "0.2"}).scheme.n_steps == 20
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.cfg")


def test_presets():
    assert set(preset_names()) == {"table1-compliance", "table1-damped", "frictionless", "chain-1d"}
    assert preset_text("table1") == preset_text("table1-compliance")
    assert load_preset("table1-damped").contact.model == "damped"
    with pytest.raises(ConfigurationError):
        preset_text("coulomb")


def test_formatting_helpers():
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(True) == "true"
    assert format_number(float("nan")) == "nan"
    assert parse_float_list("1e-2, 1e-3,,") == [1e-2, 1e-3]
    assert strip_comment("dt = 1  # шаг") == "dt = 1"
    with pytest.raises(ValueError):
        parse_float_list("1e-2, x")
