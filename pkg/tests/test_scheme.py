#!/usr/bin/env python
# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest

from conftest import make_problem
from src.cli.presets import load_preset
from src.cli.scenario import build_scenario
from src.core.discrete import cy_norm, l2v_norm
from src.core.exceptions import ContractError, ShapeError
from src.core.friction import ComplianceLaw, ConstantFriction, LipschitzStateLaw, ZeroStateLaw
from src.core.history import HistoryKernel
from src.core.models import SchemeConfig
from src.core.scheme import (ContactLaws, InitialState, alpha_step, energy_balance_defect, find_time_horizon,
                             flow_map_experiment, integrate_alpha, lambda_fixed_point, mild_residual, run_scheme)
from src.core.vi_solver import NormalCompliance


def _decay():
    return LipschitzStateLaw(lambda alpha, r: -alpha, 1.0)


def _run(scenario, **update):
    s = scenario
    config = s.config.scheme.model_copy(update=update) if update else s.config.scheme
    return run_scheme(s.prob, s.kernel, s.laws, config, s.init)


def _distance(prob, dt, first, second) -> float:
    return l2v_norm(prob, first.w - second.w, dt) + cy_norm(prob, first.alpha - second.alpha)


def test_midpoint_integrator_is_second_order():
    errors = []
    sizes = np.array([10, 20, 40, 80])
    for n in sizes:
        alpha = integrate_alpha(_decay(), np.zeros((n + 1, 1)), 1.0, 1.0 / n)
        errors.append(abs(alpha[-1, 0] - math.exp(-1.0)))
    slope = np.polyfit(np.log(1.0 / sizes), np.log(errors), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_lambda_fixed_point_matches_left_rectangle():
    dt, n = 0.1, 10
    result = lambda_fixed_point(_decay(), np.zeros((n + 1, 1)), 1.0, dt)
    np.testing.assert_allclose(result.alpha[:, 0], (1.0 - dt) ** np.arange(n + 1), rtol=1e-12)
    assert result.iterations <= n + 2
    assert result.gamma == 2.0
    assert 0.0 < result.factor < 1.0
    assert mild_residual(_decay(), result.alpha, np.zeros((n + 1, 1)), 1.0, dt) < 1e-12


def test_picard_lambda_integrator():
    dt, n = 0.1, 10
    alpha = integrate_alpha(_decay(), np.zeros((n + 1, 1)), 1.0, dt, "picard-lambda")
    np.testing.assert_allclose(alpha[:, 0], (1.0 - dt) ** np.arange(n + 1), rtol=1e-12)


def test_mild_residual_detects_wrong_state():
    alpha = np.ones((5, 1))
    assert mild_residual(_decay(), alpha, np.zeros((5, 1)), 1.0, 0.1) == pytest.approx(0.4)


def test_alpha_step_methods():
    law = _decay()
    assert alpha_step(law, np.array([1.0]), 0.0, 0.0, 0.1) == pytest.approx([1.0 - 0.1 + 0.005])
    assert alpha_step(law, np.array([1.0]), 0.0, 0.0, 0.1, "picard-lambda") == pytest.approx([0.9])
    with pytest.raises(ContractError):
        alpha_step(law, np.array([1.0]), 0.0, 0.0, 0.1, "rk4")


def test_integrator_rejects_flat_slip():
    with pytest.raises(ShapeError):
        integrate_alpha(_decay(), np.zeros(5), 1.0, 0.1)


def test_chain_picard_converges(chain_picard):
    traj, report = chain_picard
    assert report.converged
    assert report.mode == "picard"
    assert report.iterations <= 30
    assert len(report.ratios) == report.iterations - 1
    assert all(r < 1.0 for r in report.reported_ratios)
    assert report.energy_defect <= 1e-10
    assert report.worst_vi_violation >= -1e-9
    assert traj.n_steps == 100
    assert np.all(np.isfinite(traj.alpha))


def test_energy_identity_holds_for_result(chain_scenario, chain_picard):
    traj, _ = chain_picard
    assert energy_balance_defect(chain_scenario.prob, traj) <= 1e-10


def test_modes_agree_on_chain(chain_scenario, chain_picard):
    picard, _ = chain_picard
    incremental, report = _run(chain_scenario, mode="incremental")
    assert report.mode == "incremental"
    assert report.converged
    assert _distance(chain_scenario.prob, chain_scenario.config.scheme.dt, picard, incremental) <= 1e-8


def test_modes_agree_without_friction(frictionless_scenario):
    picard, picard_report = _run(frictionless_scenario)
    incremental, _ = _run(frictionless_scenario, mode="incremental")
    assert picard_report.converged
    assert _distance(frictionless_scenario.prob, frictionless_scenario.config.scheme.dt,
                     picard, incremental) <= 1e-12


def test_runs_are_deterministic(frictionless_scenario):
    first, first_report = _run(frictionless_scenario)
    second, second_report = _run(frictionless_scenario)
    np.testing.assert_array_equal(first.w, second.w)
    assert first_report == second_report


def test_horizon_mismatch_rejected(frictionless_scenario):
    s = frictionless_scenario
    with pytest.raises(ShapeError):
        run_scheme(s.prob, s.kernel, s.laws, s.config.scheme.model_copy(update={"T": 0.05}), s.init)


def test_flow_map_is_linear_without_friction(frictionless_scenario):
    s = frictionless_scenario
    directions = [(np.ones(s.prob.n_dof), np.ones(s.prob.n_contact))]
    table = flow_map_experiment(s.prob, s.kernel, s.laws, s.config.scheme, s.init, directions,
                                [1e-2, 1e-3, 1e-4])
    assert table.monotone
    assert table.horizon == pytest.approx(0.05)
    ratios = [row.ratio for row in table.rows]
    assert max(ratios) == pytest.approx(min(ratios), rel=1e-2)


def test_flow_map_rejects_invalid_ladder(frictionless_scenario):
    s = frictionless_scenario
    directions = [(np.ones(s.prob.n_dof), np.ones(s.prob.n_contact))]
    with pytest.raises(ContractError):
        flow_map_experiment(s.prob, s.kernel, s.laws, s.config.scheme, s.init, directions, [1e-3, 1e-2, 1e-4])
    with pytest.raises(ContractError):
        flow_map_experiment(s.prob, s.kernel, s.laws, s.config.scheme, s.init, directions, [1e-2, 1e-3])
    with pytest.raises(ContractError):
        flow_map_experiment(s.prob, s.kernel, s.laws, s.config.scheme, s.init,
                            [(np.zeros(s.prob.n_dof), np.zeros(s.prob.n_contact))], [1e-2, 1e-3, 1e-4])


def test_time_horizon_kept_when_contractive(frictionless_scenario):
    s = frictionless_scenario
    search = find_time_horizon(s.prob, s.kernel, s.laws, s.config.scheme, s.init)
    assert search.attempts == 1
    assert search.T == pytest.approx(0.1)
    assert search.n_steps == 100


def test_time_horizon_halved_for_stiff_history():
    # 1 степень свободы: ẇ + w + 400·∫w = 0, на T = 1 итерация Пикара не сжимает
    prob = make_problem(n_dof=1, n_steps=64)
    dt = 1.0 / 64
    kernel = HistoryKernel.for_problem(prob, dt, 400.0 * np.eye(1))
    laws = ContactLaws(NormalCompliance(ComplianceLaw(0.0), ConstantFriction(0.0)), ZeroStateLaw())
    config = SchemeConfig(T=1.0, dt=dt)
    init = InitialState(np.ones(1), np.zeros(1), np.zeros(1))

    search = find_time_horizon(prob, kernel, laws, config, init)
    assert search.attempts > 1
    assert search.n_steps == 64 // 2 ** (search.attempts - 1)
    assert search.T == pytest.approx(dt * search.n_steps)
    assert search.T < 1.0
    assert not search.ratio >= 0.9


@pytest.mark.slow
def test_chain_self_convergence_is_first_order(chain_scenario, chain_picard):
    # dt, dt/2, dt/4: порядок по разностям соседних уровней
    levels = [(chain_scenario, chain_picard[0])]
    for dt in ("5e-4", "2.5e-4"):
        s = build_scenario(load_preset("chain-1d", {"scheme.dt": dt}))
        traj, report = run_scheme(s.prob, s.kernel, s.laws, s.config.scheme, s.init)
        assert report.converged
        levels.append((s, traj))

    errors = []
    for (coarse, w_coarse), (_, w_fine) in zip(levels, levels[1:]):
        diff = w_coarse.w - w_fine.w[::2]
        errors.append(l2v_norm(coarse.prob, diff, coarse.config.scheme.dt))
    order = math.log2(errors[0] / errors[1])
    assert order == pytest.approx(1.0, abs=0.3)
