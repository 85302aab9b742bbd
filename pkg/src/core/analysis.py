#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Условия малости и проверки гипотез: аналитические константы законов,
численные оценки норм следов и измеренное поведение итерации Пикара.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from src.core.assembly import MaterialSpec, kelvin_voigt_constants
from src.core.discrete import (ConstantsRecord, DiscreteProblem, coercivity_constant, contact_l2_norm,
                               estimate_lp_operator_norm)
from src.core.exceptions import CapabilityError, ContractError
from src.core.friction import FirstOrderFriction, RsfConstants
from src.core.history import HistoryKernel, analytic_history_bound, history_lipschitz_probe
from src.core.scheme import ContactLaws, SchemeReport
from src.core.vi_solver import DampedResponse, NormalCompliance
from src.utils.logger import logger

SQRT2 = math.sqrt(2.0)
ABSTRACT_ID = "abstract-3.4"
# Вид приложения -> идентификатор условия в отчетах
APPLICATION_IDS: Dict[str, str] = {
    "normal-compliance": "thm-6.5",
    "damped-response": "thm-6.9",
    "rsf-compliance": "cor-6.24",
    "rsf-damped": "cor-6.26",
}
CONDITION_IDS = (ABSTRACT_ID, *APPLICATION_IDS.values())
APPLICATIONS = tuple(APPLICATION_IDS)
COMPLIANCE_IDS = ("thm-6.5", "cor-6.24")
DAMPED_IDS = ("thm-6.9", "cor-6.26")
RSF_IDS = ("cor-6.24", "cor-6.26")


class Ingredient(NamedTuple):
    name: str
    value: float
    provenance: str         # analytic | estimated | user


@dataclass(frozen=True)
class ConditionReport:
    """Левая и правая части условия малости; holds ⇔ margin > 0"""

    condition_id: str
    lhs: float
    rhs: float
    ingredients: Tuple[Ingredient, ...] = ()

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.margin > 0

    def ingredient(self, name: str) -> Ingredient:
        for item in self.ingredients:
            if item.name == name:
                return item
        raise KeyError(name)


class TraceNorms(NamedTuple):
    """Нормы следов ‖M‖, ‖N‖ и ‖K‖ как отображений V → L⁴(Γ_C)"""

    M: float
    N: float
    K: float


def _log_report(report: ConditionReport) -> ConditionReport:
    if report.holds:
        logger.info(f"✅ Условие {report.condition_id}: запас {report.margin:.6e}")
    else:
        logger.warning(f"⚠️ Условие {report.condition_id} не выполнено: "
                       f"{report.lhs:.6e} ≤ {report.rhs:.6e} (запас {report.margin:.6e})")
    return report


def check_abstract_condition(consts: ConstantsRecord, alpha0_norm: float) -> ConditionReport:
    """
    m_A > m_j‖N‖² + √2(β₄ + β₅‖α0‖)‖K‖‖M‖.

    :param consts: Константы гипотез
    :param alpha0_norm: ‖α0‖_Y
    :return: ConditionReport
    """
    if not alpha0_norm >= 0:
        raise ContractError(f"‖α0‖ должна быть неотрицательной: {alpha0_norm}")
    rhs = (consts.m_j * consts.op_norm_N ** 2
           + SQRT2 * (consts.beta_i(4) + consts.beta_i(5) * alpha0_norm) * consts.op_norm_K * consts.op_norm_M)
    ingredients = (
        Ingredient("m_A", consts.m_A, "user"),
        Ingredient("m_j", consts.m_j, "user"),
        Ingredient("beta4", consts.beta_i(4), "user"),
        Ingredient("beta5", consts.beta_i(5), "user"),
        Ingredient("alpha0_norm", alpha0_norm, "user"),
        Ingredient("norm_M", consts.op_norm_M, "user"),
        Ingredient("norm_N", consts.op_norm_N, "user"),
        Ingredient("norm_K", consts.op_norm_K, "user"),
    )
    return _log_report(ConditionReport(ABSTRACT_ID, consts.m_A, rhs, ingredients))


def _friction_constants(app: str, laws: ContactLaws) -> Tuple[RsfConstants, str]:
    if app in RSF_IDS:
        params = getattr(laws.friction, "params", None)
        if params is None:
            raise CapabilityError(f"Условие {app}: закон трения '{laws.friction.variant}' не содержит "
                                  f"параметров rate-and-state")
        return FirstOrderFriction(params).constants(), "analytic"
    try:
        return laws.friction.constants(), "analytic"
    except CapabilityError as e:
        raise CapabilityError(f"Условие {app}: нет констант L1, L2 закона трения ({e})") from e


def check_application_condition(app: str, material: Union[MaterialSpec, float], laws: ContactLaws,
                                traces: TraceNorms, meas: float, alpha0_norm: float) -> ConditionReport:
    """
    Условия малости для контактных приложений.

    normal-compliance (thm-6.5), rsf-compliance (cor-6.24):
        m_A > √2·p*(L1√meas + L2‖α0‖)·‖K‖·‖M‖, K = (M, N);
    damped-response (thm-6.9), rsf-damped (cor-6.26):
        m_A > m_jν√meas‖N‖² + √2(L1√meas + L2‖α0‖)·‖M‖².

    Для rsf-* константы L вычисляются по параметрам RSF линеаризованного
    закона: L1 = ‖C‖·‖a − bα0‖, L2 = ‖C‖·‖b‖.

    :param app: Вид приложения или идентификатор условия
    :param material: Материал (m_A аналитически) или значение m_A
    :param laws: Законы контакта
    :param traces: Нормы следов
    :param meas: meas(Γ_C)
    :param alpha0_norm: ‖α0‖_Y
    :return: ConditionReport
    """
    app = APPLICATION_IDS.get(app, app)
    if app not in CONDITION_IDS[1:]:
        raise ContractError(f"Неизвестное приложение: {app}; допустимы {APPLICATIONS} или {CONDITION_IDS[1:]}")
    if not meas > 0:
        raise ContractError(f"meas(Γ_C) должна быть положительной: {meas}")
    if isinstance(material, MaterialSpec):
        m_A, m_A_source = kelvin_voigt_constants(material).m_A, "analytic"
    else:
        m_A, m_A_source = float(material), "user"

    constants, source = _friction_constants(app, laws)
    friction_part = constants.L1 * math.sqrt(meas) + constants.L2 * alpha0_norm
    ingredients: List[Ingredient] = [
        Ingredient("m_A", m_A, m_A_source),
        Ingredient("L1", constants.L1, source),
        Ingredient("L2", constants.L2, source),
        Ingredient("meas", meas, "estimated"),
        Ingredient("alpha0_norm", alpha0_norm, "user"),
        Ingredient("norm_M", traces.M, "estimated"),
    ]

    if app in COMPLIANCE_IDS:
        if not isinstance(laws.contact, NormalCompliance):
            raise CapabilityError(f"Условие {app} требует модели нормальной податливости")
        p_star = laws.contact.compliance.p_star
        rhs = SQRT2 * p_star * friction_part * traces.K * traces.M
        ingredients += [Ingredient("p_star", p_star, "analytic"), Ingredient("norm_K", traces.K, "estimated")]
    else:
        if not isinstance(laws.contact, DampedResponse):
            raise CapabilityError(f"Условие {app} требует модели демпфированного отклика")
        m_j = laws.contact.damping.m_j
        rhs = m_j * math.sqrt(meas) * traces.N ** 2 + SQRT2 * friction_part * traces.M ** 2
        ingredients += [Ingredient("m_j_nu", m_j, "analytic"), Ingredient("norm_N", traces.N, "estimated")]

    return _log_report(ConditionReport(app, m_A, rhs, tuple(ingredients)))


def estimate_trace_norms(prob: DiscreteProblem, laws: ContactLaws, seed: int = 42) -> TraceNorms:
    """
    Оценки ‖M‖, ‖N‖ и ‖K‖ (K = (M, N) для податливости, K = M для
    демпфированного отклика).
    """
    norm_M = estimate_lp_operator_norm([prob.trace_tau], prob.contact_weights, prob.v_norm, seed=seed)
    norm_N = estimate_lp_operator_norm([prob.trace_nu], prob.contact_weights, prob.v_norm, seed=seed)
    if isinstance(laws.contact, DampedResponse):
        norm_K = norm_M
    else:
        norm_K = estimate_lp_operator_norm([prob.trace_tau, prob.trace_nu], prob.contact_weights, prob.v_norm,
                                           seed=seed)
    return TraceNorms(norm_M, norm_N, norm_K)


def build_constants_record(prob: DiscreteProblem, laws: ContactLaws, kernel: Optional[HistoryKernel] = None,
                           traces: Optional[TraceNorms] = None, seed: int = 42) -> ConstantsRecord:
    """
    Собирает ConstantsRecord для конкретного сценария: m_A по дискретному
    оператору вязкости, β-константы приложения, константы историй и L_G.

    :param prob: Дискретная задача
    :param laws: Законы контакта
    :param kernel: Ядро памяти (для c_R, c_Sφ)
    :param traces: Готовые нормы следов
    :param seed: Зерно оценок норм
    :return: ConstantsRecord
    """
    traces = estimate_trace_norms(prob, laws, seed) if traces is None else traces
    meas = prob.contact_measure
    friction = laws.friction.constants()
    m_A = max(coercivity_constant(prob.visc, prob.v_norm), 0.0)

    if isinstance(laws.contact, NormalCompliance):
        law = laws.contact.compliance
        p_star, l_p = law.p_star, law.lipschitz
        beta = (p_star * friction.L3, 0.0, l_p * (1.0 + friction.kappa1) * math.sqrt(meas),
                p_star * friction.L1 * math.sqrt(meas), p_star * friction.L2,
                friction.kappa3 * l_p * meas ** 0.25, friction.kappa2 * l_p)
        m_j = 0.0
    else:
        beta = (friction.L3, 0.0, 0.0, friction.L1 * math.sqrt(meas), friction.L2, 0.0, 0.0)
        m_j = laws.contact.damping.m_j * math.sqrt(meas)

    try:
        l_g = laws.state.lipschitz_constant()
    except CapabilityError as e:
        logger.warning(f"⚠️ L_G недоступна: {e}")
        l_g = 0.0

    record = ConstantsRecord(
        m_A=m_A,
        m_j=m_j,
        beta=beta,
        c_R=analytic_history_bound(kernel, prob) if kernel is not None else 0.0,
        c_S_phi=traces.N if kernel is not None else 0.0,
        L_G=l_g,
        op_norm_M=traces.M,
        op_norm_N=traces.N,
        op_norm_K=traces.K,
    )
    logger.debug(f"Константы сценария: {record}")
    return record


def alpha0_norm_of(prob: DiscreteProblem, alpha0) -> float:
    """‖α0‖_Y во взвешенной ℓ² норме контактных узлов"""
    alpha0 = np.broadcast_to(np.asarray(alpha0, dtype=float), (prob.n_contact,))
    return contact_l2_norm(alpha0, prob.contact_weights)


def scenario_conditions(prob: DiscreteProblem, laws: ContactLaws, alpha0,
                        kernel: Optional[HistoryKernel] = None) -> Tuple[ConstantsRecord, List[ConditionReport]]:
    """
    Все применимые условия для сценария: абстрактное по собранным
    константам и прикладные по виду контакта.
    """
    traces = estimate_trace_norms(prob, laws)
    record = build_constants_record(prob, laws, kernel, traces)
    norm_alpha0 = alpha0_norm_of(prob, alpha0)
    reports = [check_abstract_condition(record, norm_alpha0)]
    apps = COMPLIANCE_IDS if isinstance(laws.contact, NormalCompliance) else DAMPED_IDS
    for app in apps:
        try:
            reports.append(check_application_condition(app, record.m_A, laws, traces, prob.contact_measure,
                                                       norm_alpha0))
        except CapabilityError as e:
            logger.debug(f"Условие {app} пропущено: {e}")
    return record, reports


@dataclass(frozen=True)
class ContractionBudget:
    """
    Структурная часть S коэффициента сжатия и измеренные отношения.
    """

    structural: float
    measured: float
    measured_half: float
    converged_ok: bool
    halving_ok: bool

    @property
    def passed(self) -> bool:
        return self.converged_ok and self.halving_ok


def structural_factor(consts: ConstantsRecord, alpha0_norm: float) -> float:
    """S = 2(β₄ + β₅‖α0‖)²‖K‖²‖M‖²/(m_A − m_j‖N‖²)²"""
    denominator = consts.m_A - consts.m_j * consts.op_norm_N ** 2
    numerator = 2.0 * ((consts.beta_i(4) + consts.beta_i(5) * alpha0_norm) * consts.op_norm_K * consts.op_norm_M) ** 2
    if denominator <= 0:
        return math.inf if numerator > 0 or denominator < 0 else 0.0
    return numerator / denominator ** 2


def contraction_budget(consts: ConstantsRecord, alpha0_norm: float, report: SchemeReport,
                       report_half: Optional[SchemeReport] = None, slack: float = 0.05) -> ContractionBudget:
    """
    Сравнивает S с измеренным ρ̂_∞: при объявленной сходимости ρ̂_∞ < 1;
    при уменьшенном вдвое T ρ̂_∞ не растет (с допуском slack).

    :param consts: Константы гипотез
    :param alpha0_norm: ‖α0‖_Y
    :param report: Отчет прогона на T
    :param report_half: Отчет прогона на T/2
    :param slack: Относительный допуск сравнения
    :return: ContractionBudget
    """
    structural = structural_factor(consts, alpha0_norm)
    measured = report.asymptotic_ratio
    converged_ok = not report.converged or not measured >= 1.0
    measured_half = math.nan
    halving_ok = True
    if report_half is not None:
        measured_half = report_half.asymptotic_ratio
        if math.isfinite(measured) and math.isfinite(measured_half):
            halving_ok = measured_half <= measured * (1.0 + slack) + 1e-12
    budget = ContractionBudget(structural, measured, measured_half, converged_ok, halving_ok)
    if structural == 0.0:
        logger.info(f"S = 0: ρ̂_∞ = {measured:.3e} целиком относится к части, зависящей от T")
    else:
        logger.info(f"Бюджет сжатия: S = {structural:.6e}, ρ̂_∞ = {measured:.3e}, ρ̂_∞(T/2) = {measured_half:.3e}")
    if not budget.passed:
        logger.warning(f"⚠️ Бюджет сжатия нарушен: {budget}")
    return budget


# --- вероятностные проверки гипотез --------------------------------------

@dataclass(frozen=True)
class HypothesisResult:
    name: str
    status: str                     # passed | failed | skipped
    n_samples: int
    worst_margin: float
    witness: Optional[Tuple[float, ...]] = None
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "failed"


@dataclass(frozen=True)
class HypothesisSuite:
    results: Tuple[HypothesisResult, ...]

    @property
    def passed(self) -> bool:
        return all(result.passed for result in self.results)

    def by_name(self, name: str) -> HypothesisResult:
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)


def _verdict(name: str, margins: np.ndarray, scale: np.ndarray, samples: Tuple[np.ndarray, ...],
             slack: float) -> HypothesisResult:
    """Нарушение: margin < −slack·max(1, scale)"""
    margins = np.asarray(margins, dtype=float)
    scale = np.broadcast_to(np.maximum(1.0, np.abs(np.asarray(scale, dtype=float))), margins.shape)
    flat = margins.reshape(margins.shape[0], -1)
    worst_row = int(np.argmin(flat.min(axis=1)))
    worst = float(flat[worst_row].min())
    violated = margins < -slack * scale
    if np.any(violated):
        row = int(np.argwhere(violated.reshape(margins.shape[0], -1).any(axis=1))[0][0])
        witness = tuple(float(np.ravel(s)[row]) for s in samples)
        logger.warning(f"⚠️ Гипотеза {name} нарушена: свидетель {witness}")
        return HypothesisResult(name, "failed", margins.shape[0], worst, witness)
    return HypothesisResult(name, "passed", margins.shape[0], worst,
                            tuple(float(np.ravel(s)[worst_row]) for s in samples))


def _skipped(name: str, reason: str) -> HypothesisResult:
    return HypothesisResult(name, "skipped", 0, math.nan, None, reason)


def _windows(laws: ContactLaws) -> Tuple[np.ndarray, float]:
    """Базовая точка α0 и масштаб скоростей v0 окон выборки"""
    params = getattr(laws.friction, "params", None)
    if params is None:
        params = getattr(laws.state, "params", None)
    if params is None:
        return np.zeros(1), 1.0
    return np.atleast_1d(params.alpha0), float(np.max(params.v0))


def _probe_friction(laws: ContactLaws, rng, n: int, slack: float) -> List[HypothesisResult]:
    try:
        c = laws.friction.constants()
    except CapabilityError as e:
        return [_skipped("H(mu)(ii)", str(e)), _skipped("H(mu)(iii)", str(e))]
    alpha0, v0 = _windows(laws)
    r1, r2 = rng.uniform(0.0, 10.0 * v0, size=(2, n, 1))
    y1, y2 = alpha0 + rng.uniform(-1.0, 1.0, size=(2, n, 1))
    mu1 = laws.friction.mu(r1, y1)
    mu2 = laws.friction.mu(r2, y2)
    bound = (c.L1 + c.L2 * np.abs(y2)) * np.abs(r1 - r2) + c.L3 * np.abs(r1) * np.abs(y1 - y2)
    lipschitz = _verdict("H(mu)(ii)", bound - np.abs(mu1 - mu2), bound, (r1, y1, r2, y2), slack)
    growth_bound = c.kappa1 + c.kappa2 * np.abs(y1) + c.kappa3 * np.abs(r1)
    growth = _verdict("H(mu)(iii)", growth_bound - np.abs(mu1), growth_bound, (r1, y1), slack)
    return [lipschitz, growth]


def _probe_state(laws: ContactLaws, rng, n: int, slack: float) -> List[HypothesisResult]:
    try:
        l_g = laws.state.lipschitz_constant()
    except CapabilityError as e:
        return [_skipped("H(G)(ii)", str(e)), _skipped("H(G)(iii)", str(e))]
    alpha0, v0 = _windows(laws)
    a1, a2 = alpha0 + rng.uniform(-1.0, 1.0, size=(2, n, 1))
    r1, r2 = rng.uniform(0.0, 10.0 * v0, size=(2, n, 1))
    bound = l_g * (np.abs(a1 - a2) + np.abs(r1 - r2))
    difference = np.abs(laws.state.rate(a1, r1) - laws.state.rate(a2, r2))
    lipschitz = _verdict("H(G)(ii)", bound - difference, bound, (a1, r1, a2, r2), slack)
    at_zero = laws.state.rate(np.zeros(1), np.zeros(1))
    finite = HypothesisResult("H(G)(iii)", "passed" if np.all(np.isfinite(at_zero)) else "failed", 1,
                              float(-np.max(np.abs(at_zero))))
    return [lipschitz, finite]


def _probe_compliance(laws: ContactLaws, rng, n: int, slack: float) -> List[HypothesisResult]:
    if not isinstance(laws.contact, NormalCompliance):
        return []
    law = laws.contact.compliance
    r1, r2 = rng.uniform(-2.0 * law.r_star, 2.0 * law.r_star, size=(2, n))
    p1, p2 = law.pressure(r1), law.pressure(r2)
    bound = law.lipschitz * np.abs(r1 - r2)
    lipschitz = _verdict("H(p)(ii)", bound - np.abs(p1 - p2), bound, (r1, r2), slack)
    bounded = _verdict("H(p)(iii)", law.p_star - p1, np.full(n, law.p_star), (r1,), slack)
    return [lipschitz, bounded]


def _probe_damping(laws: ContactLaws, rng, n: int, slack: float) -> List[HypothesisResult]:
    if not isinstance(laws.contact, DampedResponse):
        return []
    law = laws.contact.damping
    c0, c1 = law.growth_constants()
    r1, r2 = rng.uniform(-10.0, 10.0, size=(2, n))
    ones = np.ones(n)
    subgradient = np.maximum(np.abs(law.dirderiv(r1, ones)), np.abs(law.dirderiv(r1, -ones)))
    growth_bound = c0 + c1 * np.abs(r1)
    growth = _verdict("H(j_nu)(iii)", growth_bound - subgradient, growth_bound, (r1,), slack)
    lhs = law.dirderiv(r1, r2 - r1) + law.dirderiv(r2, r1 - r2)
    bound = law.m_j * (r1 - r2) ** 2
    monotone = _verdict("H(j_nu)(iv)", bound - lhs, np.abs(lhs), (r1, r2), slack)
    return [growth, monotone]


def _probe_history(kernel: Optional[HistoryKernel], prob: Optional[DiscreteProblem], n: int,
                   seed: int) -> List[HypothesisResult]:
    if kernel is None or prob is None:
        reason = "ядро памяти не задано"
        return [_skipped("H(R)(i)", reason), _skipped("H(S_phi)(i)", reason)]
    probe = history_lipschitz_probe(kernel, prob, n_trials=max(1, min(n // 1000, 200)), seed=seed)
    slack = 1e-10
    results = []
    for name, measured, bound in (("H(R)(i)", probe.c_R, probe.bound_R),
                                  ("H(S_phi)(i)", probe.c_S_phi, probe.bound_S_phi)):
        margin = bound - measured
        ok = margin >= -slack * max(1.0, bound)
        results.append(HypothesisResult(name, "passed" if ok else "failed", probe.n_ratios, margin,
                                        (measured, bound)))
    return results


def hypothesis_probe_suite(laws: ContactLaws, kernel: Optional[HistoryKernel] = None,
                           prob: Optional[DiscreteProblem] = None, n_samples: int = 100_000,
                           seed: int = 42, slack: float = 1e-10) -> HypothesisSuite:
    """
    Вероятностные проверки гипотез на заявленных константах.

    Окна: r ∈ [0, 10v0], α ∈ [α0 − 1, α0 + 1] для μ и G; r ∈ [−2r*, 2r*]
    для p; r ∈ [−10, 10] для j_ν. Проверка μ реализует несимметричную
    форму |μ(r1, y1) − μ(r2, y2)| ≤ (L1 + L2|y2|)|r1 − r2| + L3|r1||y1 − y2|.

    :param laws: Законы контакта
    :param kernel: Ядро памяти (для гипотез об историях)
    :param prob: Дискретная задача (нормы для гипотез об историях)
    :param n_samples: Размер выборки на гипотезу
    :param seed: Зерно генератора
    :param slack: Относительный допуск
    :return: HypothesisSuite
    """
    if n_samples < 1:
        raise ContractError("n_samples должно быть ≥ 1")
    rng = np.random.default_rng(seed)
    results: List[HypothesisResult] = []
    results += _probe_friction(laws, rng, n_samples, slack)
    results += _probe_state(laws, rng, n_samples, slack)
    results += _probe_compliance(laws, rng, n_samples, slack)
    results += _probe_damping(laws, rng, n_samples, slack)
    results += _probe_history(kernel, prob, n_samples, seed)
    suite = HypothesisSuite(tuple(results))
    summary: Dict[str, str] = {result.name: result.status for result in results}
    logger.info(f"{'✅' if suite.passed else '❌'} Проверка гипотез: {summary}")
    return suite
