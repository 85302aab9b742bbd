#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Команды CLI: run, check, flowmap, rsf-curves, sweep.

Каждая команда возвращает код возврата: 0 - успех, 2 - расчет
выполнен, но не сошелся (или проверка не пройдена), 1 - ошибка.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.analysis import (ConditionReport, HypothesisSuite, alpha0_norm_of, contraction_budget,
                               hypothesis_probe_suite, scenario_conditions)
from src.core.discrete import v_norm_of
from src.core.exceptions import ConfigurationError, SolverLibraryError
from src.core.friction import (AgingLaw, FirstOrderAgingLaw, FirstOrderFriction, RegularizedFriction,
                               approximation_order)
from src.core.models import RunConfig
from src.core.scheme import flow_map_experiment, run_scheme
from src.cli.presets import load_preset
from src.cli.scenario import Scenario, build_scenario, rsf_params
from src.utils.config_parser import config_from_text, load_config, serialize_config
from src.utils.logger import logger
from src.utils.report_writer import ReportWriter, flow_map_frame

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2

DEFAULT_PRESET = "table1-compliance"
DEFAULT_LADDER = (1e-2, 1e-3, 1e-4)
CURVE_DELTAS = np.geomspace(1e-4, 1e-1, 13)


def resolve_config(config_path: Optional[str] = None, preset: Optional[str] = None,
                   overrides: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Конфигурация из файла или пресета (по умолчанию table1-compliance)
    с переопределениями ключей.
    """
    if config_path and preset:
        raise ConfigurationError("Укажите либо --config, либо --preset")
    if config_path:
        return load_config(config_path, overrides)
    return load_preset(preset or DEFAULT_PRESET, overrides)


def output_dir(config: RunConfig, out: Optional[str] = None) -> Path:
    return Path(out) if out else Path(config.output.directory)


def execute(command: Callable[..., int], *args, **kwargs) -> int:
    """
    Запускает команду и переводит исключения в код возврата 1.
    """
    try:
        return command(*args, **kwargs)
    except SolverLibraryError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
    except OSError as e:
        logger.error(f"❌ Ошибка ввода-вывода: {e}")
    return EXIT_ERROR


def _margins(reports: Sequence[ConditionReport]) -> Dict[str, float]:
    return {report.condition_id: report.margin for report in reports}


# --- run -----------------------------------------------------------------

def cmd_run(config: RunConfig, out_dir: Path) -> int:
    """
    Расчет одного сценария: траектория и отчет в out_dir.

    :param config: Конфигурация
    :param out_dir: Каталог вывода
    :return: 0 при сходимости, 2 без сходимости
    """
    scenario = build_scenario(config)
    _, reports = scenario_conditions(scenario.prob, scenario.laws, scenario.init.alpha0, scenario.kernel)
    traj, report = run_scheme(scenario.prob, scenario.kernel, scenario.laws, config.scheme, scenario.init,
                              _margins(reports))

    writer = ReportWriter(out_dir)
    if "trajectory" in config.output.formats:
        writer.write_trajectory(traj)
    if "report" in config.output.formats:
        writer.write_report(report)
    if report.converged:
        logger.info(f"✅ Расчет завершен: {report.iterations} итераций")
        return EXIT_OK
    logger.warning("⚠️ Расчет не сошелся")
    return EXIT_NOT_CONVERGED


# --- check ---------------------------------------------------------------

def conditions_frame(reports: Sequence[ConditionReport]) -> pd.DataFrame:
    return pd.DataFrame({
        "condition": [r.condition_id for r in reports],
        "lhs": [r.lhs for r in reports],
        "rhs": [r.rhs for r in reports],
        "margin": [r.margin for r in reports],
        "holds": [r.holds for r in reports],
    })


def ingredients_frame(reports: Sequence[ConditionReport]) -> pd.DataFrame:
    rows = [(r.condition_id, item.name, item.value, item.provenance) for r in reports for item in r.ingredients]
    return pd.DataFrame(rows, columns=["condition", "name", "value", "provenance"])


def hypotheses_frame(suite: HypothesisSuite) -> pd.DataFrame:
    return pd.DataFrame({
        "hypothesis": [r.name for r in suite.results],
        "status": [r.status for r in suite.results],
        "n_samples": [r.n_samples for r in suite.results],
        "worst_margin": [r.worst_margin for r in suite.results],
        "note": [r.note for r in suite.results],
    })


def _budget_items(scenario: Scenario, consts, reports) -> List[Tuple[str, object]]:
    config = scenario.config
    half_steps = max(config.scheme.n_steps // 2, 1)
    half_config = config.scheme.model_copy(update={"T": config.scheme.dt * half_steps})
    margins = _margins(reports)
    _, report = run_scheme(scenario.prob, scenario.kernel, scenario.laws, config.scheme, scenario.init, margins)
    _, report_half = run_scheme(scenario.prob.with_horizon(half_steps), scenario.kernel, scenario.laws,
                                half_config, scenario.init, margins)
    budget = contraction_budget(consts, alpha0_norm_of(scenario.prob, scenario.init.alpha0), report, report_half)
    return [("structural", budget.structural), ("measured", budget.measured),
            ("measured_half", budget.measured_half), ("converged_ok", budget.converged_ok),
            ("halving_ok", budget.halving_ok), ("passed", budget.passed)]


def cmd_check(config: RunConfig, out_dir: Path, n_samples: int = 100_000, budget: bool = False) -> int:
    """
    Условия малости и вероятностные проверки гипотез. Невыполненное
    условие малости только предупреждает (условие достаточное);
    нарушенная гипотеза дает код 2.

    :param config: Конфигурация
    :param out_dir: Каталог вывода
    :param n_samples: Размер выборки на гипотезу
    :param budget: Дополнительно сравнить бюджет сжатия с прогонами на T и T/2
    :return: Код возврата
    """
    scenario = build_scenario(config)
    consts, reports = scenario_conditions(scenario.prob, scenario.laws, scenario.init.alpha0, scenario.kernel)
    suite = hypothesis_probe_suite(scenario.laws, scenario.kernel, scenario.prob, n_samples=n_samples,
                                   seed=config.scheme.seed)

    conditions = conditions_frame(reports)
    hypotheses = hypotheses_frame(suite)
    print(conditions.to_string(index=False))
    print()
    print(hypotheses.to_string(index=False))

    writer = ReportWriter(out_dir)
    writer.write_frame(conditions, "conditions.csv")
    writer.write_frame(ingredients_frame(reports), "ingredients.csv")
    writer.write_frame(hypotheses, "hypotheses.csv")
    writer.write_items(consts.model_dump().items(), "constants.txt")
    if budget:
        writer.write_items(_budget_items(scenario, consts, reports), "budget.txt")

    failed = [r.condition_id for r in reports if not r.holds]
    if failed:
        logger.warning(f"⚠️ Условия малости не выполнены: {', '.join(failed)}; расчет все равно можно запустить")
    return EXIT_OK if suite.passed else EXIT_NOT_CONVERGED


# --- flowmap -------------------------------------------------------------

def cmd_flowmap(config: RunConfig, out_dir: Path, ladder: Sequence[float] = DEFAULT_LADDER) -> int:
    """
    Непрерывная зависимость от начальных данных на [0, T/2]. Ступени
    лестницы умножаются на ‖w0‖_V (на 1, если w0 = 0); направление
    возмущения - (w0, 1) по (скорости, состоянию), нормированное.

    :return: 0, если расстояния не растут, иначе 2
    """
    scenario = build_scenario(config)
    prob, init = scenario.prob, scenario.init
    scale = v_norm_of(prob, init.w0)
    scale = scale if scale > 0 else 1.0
    dw = init.w0 if np.any(init.w0) else np.ones(prob.n_dof)
    direction = (dw, np.ones(prob.n_contact))

    table = flow_map_experiment(prob, scenario.kernel, scenario.laws, config.scheme, init, [direction],
                                [scale * delta for delta in ladder])
    print(flow_map_frame(table).to_string(index=False))
    ReportWriter(out_dir).write_flow_map(table)
    return EXIT_OK if table.monotone else EXIT_NOT_CONVERGED


# --- rsf-curves ----------------------------------------------------------

def cmd_rsf_curves(config: RunConfig, out_dir: Path, alpha_min: Optional[float] = None,
                   alpha_max: Optional[float] = None, n_points: int = 401, rate: Optional[float] = None) -> int:
    """
    Данные для графиков точного и линеаризованного законов: G(α) при
    фиксированной скорости (закон старения) и μ(α) (регуляризованный
    закон). По умолчанию α ∈ [α0 − 1, α0 + 1], r = v0.

    :return: 0
    """
    params = rsf_params(config.contact)
    alpha0 = float(params.alpha0)
    alpha_min = alpha0 - 1.0 if alpha_min is None else alpha_min
    alpha_max = alpha0 + 1.0 if alpha_max is None else alpha_max
    rate = float(params.v0) if rate is None else rate
    if alpha_max < alpha_min or n_points < 1:
        raise ConfigurationError(f"Пустой диапазон α: [{alpha_min}, {alpha_max}], {n_points} точек")
    alpha = np.linspace(alpha_min, alpha_max, n_points) if n_points > 1 else np.array([alpha_min])

    aging, aging_linear = AgingLaw(params), FirstOrderAgingLaw(params)
    friction, friction_linear = RegularizedFriction(params), FirstOrderFriction(params)
    writer = ReportWriter(out_dir)
    writer.write_curve(alpha, aging.rate(alpha, rate), aging_linear.rate(alpha, rate), "state_curve.csv")
    writer.write_curve(alpha, friction.mu(rate, alpha), friction_linear.mu(rate, alpha), "friction_curve.csv")

    rates = np.linspace(0.0, 10.0 * float(params.v0), 101)
    slope_state, _ = approximation_order(lambda a: aging.rate(a, rates), lambda a: aging_linear.rate(a, rates),
                                         alpha0, CURVE_DELTAS)
    slope_friction, _ = approximation_order(lambda a: friction.mu(rates, a), lambda a: friction_linear.mu(rates, a),
                                            alpha0, CURVE_DELTAS)
    logger.info(f"📈 Порядок приближения: G - {slope_state:.3f}, μ - {slope_friction:.3f}")
    writer.write_items([("rate", rate), ("alpha0", alpha0), ("slope_state", slope_state),
                        ("slope_friction", slope_friction)], "approximation.txt")
    return EXIT_OK


# --- sweep ---------------------------------------------------------------

def sweep_configs(config: RunConfig, key: str, values: Sequence[str]) -> List[Tuple[str, RunConfig]]:
    """Конфигурации для каждого значения ключа key (вида секция.ключ)"""
    text = serialize_config(config)
    return [(value, config_from_text(text, {key: value})) for value in values]


def _run_directory(root: Path, key: str, value: str) -> Path:
    return root / f"{key}={value}"


def cmd_sweep(config: RunConfig, out_dir: Path, key: str, values: Sequence[str],
              max_workers: Optional[int] = None) -> int:
    """
    Независимые расчеты по списку значений одного ключа в пуле потоков,
    каждый в своем подкаталоге out_dir/key=value.

    :return: 1, если хоть один расчет упал; 2, если хоть один не сошелся; иначе 0
    """
    runs = sweep_configs(config, key, values)
    logger.info(f"🚀 Серия из {len(runs)} расчетов по ключу {key}")
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = {value: pool.submit(execute, cmd_run, run_config, _run_directory(out_dir, key, value))
                   for value, run_config in runs}
        codes = {value: future.result() for value, future in futures.items()}

    summary = pd.DataFrame({"value": list(codes), "exit_code": list(codes.values())})
    print(summary.to_string(index=False))
    ReportWriter(out_dir).write_frame(summary, "sweep.csv")
    if any(code == EXIT_ERROR for code in codes.values()):
        return EXIT_ERROR
    return EXIT_NOT_CONVERGED if any(codes.values()) else EXIT_OK


def describe_exit(code: int) -> str:
    return {EXIT_OK: "успех", EXIT_ERROR: "ошибка", EXIT_NOT_CONVERGED: "нет сходимости"}.get(code, str(code))
