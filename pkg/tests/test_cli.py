#!/usr/bin/env python
# -*- coding: utf-8 -*-

import pandas as pd
import pytest

import main
from src.cli.commands import (EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, cmd_check, cmd_flowmap, cmd_rsf_curves,
                              cmd_run, cmd_sweep, execute, output_dir, resolve_config, sweep_configs)
from src.cli.presets import load_preset
from src.core.exceptions import ConfigurationError


def _items(path) -> dict:
    items = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        key, value = line.split(" = ", 1)
        items[key] = value
    return items


def test_frictionless_run(tmp_path):
    config = load_preset("frictionless")
    assert cmd_run(config, tmp_path) == EXIT_OK
    trajectory = pd.read_csv(tmp_path / "trajectory.csv")
    assert len(trajectory) == config.scheme.n_steps + 1
    assert list(trajectory.columns[:2]) == ["t", "w_0"]
    assert _items(tmp_path / "report.txt")["converged"] == "true"


def test_table1_run_is_reproducible(tmp_path):
    config = load_preset("table1")
    first, second = tmp_path / "first", tmp_path / "second"
    code = cmd_run(config, first)
    assert code in (EXIT_OK, EXIT_NOT_CONVERGED)
    assert cmd_run(config, second) == code

    for name in ("trajectory.csv", "report.txt"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    items = _items(first / "report.txt")
    assert "ratios" in items
    assert "margin.cor-6.24" in items
    assert "wall_time" not in items


def test_output_formats_respected(tmp_path):
    config = load_preset("frictionless", {"output.formats": "report"})
    assert cmd_run(config, tmp_path) == EXIT_OK
    assert (tmp_path / "report.txt").exists()
    assert not (tmp_path / "trajectory.csv").exists()


def test_rsf_curves(tmp_path):
    config = load_preset("table1")
    assert cmd_rsf_curves(config, tmp_path, n_points=51) == EXIT_OK
    state = pd.read_csv(tmp_path / "state_curve.csv")
    friction = pd.read_csv(tmp_path / "friction_curve.csv")
    assert list(state.columns) == ["alpha", "exact", "first_order"]
    assert len(state) == len(friction) == 51

    alpha0 = config.contact.initial_state()
    middle = friction.iloc[25]
    assert middle["alpha"] == pytest.approx(alpha0)
    assert middle["first_order"] == pytest.approx(middle["exact"], rel=1e-12)

    items = _items(tmp_path / "approximation.txt")
    assert float(items["slope_state"]) == pytest.approx(2.0, abs=0.1)
    assert float(items["slope_friction"]) == pytest.approx(2.0, abs=0.1)


def test_rsf_curves_single_point(tmp_path):
    config = load_preset("table1")
    alpha0 = config.contact.initial_state()
    assert cmd_rsf_curves(config, tmp_path, alpha0, alpha0, n_points=5) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "state_curve.csv")) == 5
    with pytest.raises(ConfigurationError):
        cmd_rsf_curves(config, tmp_path, alpha0 + 1.0, alpha0)


def test_check_frictionless(tmp_path):
    assert cmd_check(load_preset("frictionless"), tmp_path, n_samples=2_000) == EXIT_OK
    conditions = pd.read_csv(tmp_path / "conditions.csv")
    assert list(conditions["condition"]) == ["abstract-3.4", "thm-6.5"]
    hypotheses = pd.read_csv(tmp_path / "hypotheses.csv")
    assert set(hypotheses["status"]) <= {"passed", "skipped"}
    assert "m_A" in _items(tmp_path / "constants.txt")
    assert not (tmp_path / "budget.txt").exists()


def test_check_with_budget_on_chain(tmp_path):
    assert cmd_check(load_preset("chain-1d"), tmp_path, n_samples=5_000, budget=True) == EXIT_OK
    budget = _items(tmp_path / "budget.txt")
    assert budget["passed"] == "true"
    assert float(budget["measured"]) < 1.0


def test_flowmap_frictionless(tmp_path):
    assert cmd_flowmap(load_preset("frictionless"), tmp_path) == EXIT_OK
    table = pd.read_csv(tmp_path / "flowmap.csv")
    assert len(table) == 3
    assert table["distance"].is_monotonic_decreasing


def test_sweep(tmp_path):
    config = load_preset("frictionless")
    assert cmd_sweep(config, tmp_path, "scheme.dt", ["1e-2", "5e-3"], max_workers=2) == EXIT_OK
    for value in ("1e-2", "5e-3"):
        assert (tmp_path / f"scheme.dt={value}" / "trajectory.csv").exists()
    summary = pd.read_csv(tmp_path / "sweep.csv")
    assert list(summary["exit_code"]) == [0, 0]
    assert len(pd.read_csv(tmp_path / "scheme.dt=5e-3" / "trajectory.csv")) == 21


def test_sweep_with_invalid_value(tmp_path):
    config = load_preset("frictionless")
    assert [value for value, _ in sweep_configs(config, "scheme.seed", ["1", "2"])] == ["1", "2"]
    assert execute(cmd_sweep, config, tmp_path, "scheme.dt", ["0.03"]) == EXIT_ERROR


def test_resolve_config(tmp_path, monkeypatch):
    with pytest.raises(ConfigurationError):
        resolve_config(str(tmp_path / "run.cfg"), "frictionless")
    assert resolve_config().mesh.contact == ("bottom",)
    monkeypatch.setenv("RSC_OUTPUT_DIR", str(tmp_path / "env"))
    config = resolve_config(preset="chain-1d")
    assert output_dir(config) == tmp_path / "env"
    assert output_dir(config, str(tmp_path)) == tmp_path


def test_main_run(tmp_path):
    code = main.main(["run", "--preset", "frictionless", "--out", str(tmp_path), "--dt", "1e-2", "--no-logs"])
    assert code == EXIT_OK
    assert len(pd.read_csv(tmp_path / "trajectory.csv")) == 11


def test_main_rejects_non_integral_step_count(tmp_path):
    code = main.main(["run", "--preset", "frictionless", "--out", str(tmp_path), "--dt", "0.03", "--no-logs"])
    assert code == EXIT_ERROR
    assert not (tmp_path / "trajectory.csv").exists()


def test_main_rejects_unknown_preset(tmp_path):
    assert main.main(["check", "--preset", "coulomb", "--out", str(tmp_path), "--no-logs"]) == EXIT_ERROR
