#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Развязанная итерация Пикара по всей траектории, интегрирование
уравнения состояния, пошаговый (инкрементальный) режим и эксперимент
с непрерывной зависимостью от начальных данных.

Внутри внешней итерации n данные ξ, η, χ, g и α̃ на шаге k берутся с
итерации n − 1 в момент t_k, а инерционная цепочка w^n_{k−1} - с
текущей итерации. Каждый проход - последовательность выпуклых задач.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.discrete import (DiscreteProblem, TrajectoryState, contact_l2_norm, cy_norm, frozen_array,
                               l2v_norm, v_norm_of)
from src.core.exceptions import CapabilityError, ContractError, DiagnosticsError, ShapeError, SolverError
from src.core.friction import FrictionLaw, StateLaw
from src.core.history import HistoryKernel
from src.core.models import SchemeConfig
from src.core.vi_solver import ContactModel, FrozenStepData, SolverOptions, StepSolution, solve_step, verify_vi
from src.utils.logger import logger

ALPHA_METHODS = ("explicit-midpoint", "picard-lambda")
RATIO_FLOOR = 1e-14


@dataclass(frozen=True)
class ContactLaws:
    """Модель контакта (с законом трения) и закон эволюции состояния"""

    contact: ContactModel
    state: StateLaw

    @property
    def friction(self) -> FrictionLaw:
        return self.contact.friction


@dataclass(frozen=True)
class InitialState:
    """Начальные данные w0, u0 (по степеням свободы) и α0 (по контактным узлам)"""

    w0: np.ndarray
    u0: np.ndarray
    alpha0: np.ndarray

    def __post_init__(self):
        for name in ("w0", "u0", "alpha0"):
            value = frozen_array(np.atleast_1d(getattr(self, name)))
            if not np.all(np.isfinite(value)):
                raise ContractError(f"Начальные данные {name} содержат нечисловые значения")
            object.__setattr__(self, name, value)

    def check(self, prob: DiscreteProblem) -> None:
        if self.w0.shape != (prob.n_dof,) or self.u0.shape != (prob.n_dof,):
            raise ShapeError(f"w0 {self.w0.shape} и u0 {self.u0.shape}: ожидается ({prob.n_dof},)")
        if self.alpha0.shape != (prob.n_contact,):
            raise ShapeError(f"alpha0 {self.alpha0.shape}: ожидается ({prob.n_contact},)")

    def perturbed(self, delta: float, direction_w, direction_alpha) -> "InitialState":
        return InitialState(self.w0 + delta * np.asarray(direction_w, dtype=float), self.u0,
                            self.alpha0 + delta * np.asarray(direction_alpha, dtype=float))


@dataclass(frozen=True)
class SchemeReport:
    """
    Отчет о прогоне: приращения e_w^n, e_α^n, отношения ρ̂_n = e^n/e^{n−1}
    (NaN, если знаменатель ≤ 1e-14; ρ̂ для n = 2, 3, ...), флаг сходимости,
    запасы условий малости и проверки шагов. Время работы в сравнение
    и сериализацию не входит.
    """

    mode: str
    increments_w: Tuple[float, ...]
    increments_alpha: Tuple[float, ...]
    ratios: Tuple[float, ...]
    converged: bool
    iterations: int
    condition_margins: Dict[str, float] = field(default_factory=dict)
    energy_defect: float = 0.0
    worst_vi_violation: float = 0.0
    max_kkt_residual: float = 0.0
    wall_time: float = field(default=0.0, compare=False)

    @property
    def reported_ratios(self) -> Tuple[float, ...]:
        return tuple(r for r in self.ratios if math.isfinite(r))

    @property
    def asymptotic_ratio(self) -> float:
        """Последнее вычисленное отношение (NaN, если их нет)"""
        reported = self.reported_ratios
        return reported[-1] if reported else math.nan

    def ratio_at(self, iteration: int) -> float:
        """ρ̂ на итерации iteration ≥ 2 (NaN, если не вычислено)"""
        index = iteration - 2
        return self.ratios[index] if 0 <= index < len(self.ratios) else math.nan


class _StepChecks:
    """Худшие значения проверок шагов за один проход"""

    def __init__(self):
        self.worst_vi = math.inf
        self.max_kkt = 0.0

    def record(self, prob, data, solution: StepSolution, w_prev, dt, laws: ContactLaws,
               config: SchemeConfig, k: int) -> None:
        self.max_kkt = max(self.max_kkt, solution.kkt_residual)
        value = verify_vi(prob, data, solution.w_new, w_prev, dt, laws.contact,
                          n_probes=config.vi_probes, seed=config.seed + k)
        self.worst_vi = min(self.worst_vi, value)

    @property
    def vi_violation(self) -> float:
        return 0.0 if self.worst_vi == math.inf else self.worst_vi


def solver_options(config: SchemeConfig) -> SolverOptions:
    return SolverOptions(kkt_tol=config.kkt_tol, relative_kkt=config.kkt_relative, max_iter=config.max_inner,
                         nonlinear_visc=config.nonlinear_visc)


def slip_rates(prob: DiscreteProblem, w) -> np.ndarray:
    """g_k = |M w_k| по всем выборкам"""
    return np.abs(np.asarray(w, dtype=float) @ prob.trace_tau.T)


# --- уравнение состояния -------------------------------------------------

def alpha_step(state_law: StateLaw, alpha_prev, r_prev, r_next, dt: float,
               method: str = "explicit-midpoint") -> np.ndarray:
    """
    Один шаг по α.

    explicit-midpoint: α_{k+1} = α_k + dt·G(α_k + dt/2·G(α_k, r_k), (r_k + r_{k+1})/2);
    picard-lambda: левые прямоугольники α_{k+1} = α_k + dt·G(α_k, r_k).
    """
    if method == "explicit-midpoint":
        half = alpha_prev + 0.5 * dt * state_law.rate(alpha_prev, r_prev)
        return alpha_prev + dt * state_law.rate(half, 0.5 * (np.asarray(r_prev) + np.asarray(r_next)))
    if method == "picard-lambda":
        return alpha_prev + dt * state_law.rate(alpha_prev, r_prev)
    raise ContractError(f"Неизвестный метод интегрирования α: {method}")


class LambdaFixedPoint(NamedTuple):
    alpha: np.ndarray
    iterations: int
    gamma: float
    factor: float


def _check_rates(slip: np.ndarray, alpha0: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    slip = np.asarray(slip, dtype=float)
    if slip.ndim != 2:
        raise ShapeError(f"Скорости скольжения: ожидается массив (n_steps + 1, n_contact), получено {slip.shape}")
    alpha0 = np.broadcast_to(np.asarray(alpha0, dtype=float), (slip.shape[1],)).copy()
    return slip, alpha0


def lambda_fixed_point(state_law: StateLaw, slip, alpha0, dt: float, tol: float = 1e-12,
                       max_iter: Optional[int] = None) -> LambdaFixedPoint:
    """
    Неподвижная точка интегрального отображения
    (Λα)_k = α0 + dt·Σ_{j<k} G(α_j, r_j).

    Приращения контролируются в весовой норме max_k e^{−γt_k}|·| с
    γ = 2·L_G, в которой Λ сжимает с коэффициентом L_G·dt/(e^{γdt} − 1).
    Рост приращения в этой норме означает, что Λ не сжимает.

    :param state_law: Закон эволюции
    :param slip: Скорости скольжения (n_steps + 1, n_contact)
    :param alpha0: Начальное состояние
    :param dt: Шаг по времени
    :param tol: Порог sup-нормы приращения
    :param max_iter: Максимум итераций (по умолчанию n_steps + 10)
    :return: LambdaFixedPoint
    """
    slip, alpha0 = _check_rates(slip, alpha0)
    n_steps = slip.shape[0] - 1
    max_iter = n_steps + 10 if max_iter is None else max_iter
    try:
        lipschitz = state_law.lipschitz_constant()
        gamma = 2.0 * lipschitz if lipschitz > 0 else 1.0
        factor = lipschitz * dt / math.expm1(gamma * dt)
    except CapabilityError:
        gamma, factor = 0.0, math.nan
    weights = np.exp(-gamma * dt * np.arange(n_steps + 1))

    alpha = np.tile(alpha0, (n_steps + 1, 1))
    previous = math.inf
    for iteration in range(1, max_iter + 1):
        updated = np.empty_like(alpha)
        updated[0] = alpha0
        updated[1:] = alpha0 + dt * np.cumsum(state_law.rate(alpha[:-1], slip[:-1]), axis=0)
        if not np.all(np.isfinite(updated)):
            raise DiagnosticsError("Состояние α ушло в бесконечность: уменьшите T")
        difference = np.abs(updated - alpha)
        sup_increment = float(difference.max())
        weighted = float(np.max(weights * difference.max(axis=1)))
        if weighted > previous * (1.0 + 1e-9) and weighted > tol:
            raise DiagnosticsError(f"Отображение Λ не сжимает (приращение {previous:.3e} → {weighted:.3e}): "
                                   f"уменьшите T")
        alpha, previous = updated, weighted
        if sup_increment < tol:
            logger.debug(f"Λ: неподвижная точка за {iteration} итераций, γ = {gamma:.3g}, "
                         f"коэффициент сжатия {factor:.3g}")
            return LambdaFixedPoint(alpha, iteration, gamma, factor)
    raise DiagnosticsError(f"Итерация Λ не сошлась за {max_iter} итераций")


def integrate_alpha(state_law: StateLaw, slip, alpha0, dt: float,
                    method: str = "explicit-midpoint") -> np.ndarray:
    """
    Траектория состояния α(t_k) по скоростям скольжения во всех t_k.

    :param state_law: Закон эволюции G(α, r)
    :param slip: Скорости скольжения (n_steps + 1, n_contact)
    :param alpha0: Начальное состояние
    :param dt: Шаг по времени
    :param method: explicit-midpoint или picard-lambda
    :return: Массив (n_steps + 1, n_contact)
    """
    if method == "picard-lambda":
        return lambda_fixed_point(state_law, slip, alpha0, dt).alpha
    if method != "explicit-midpoint":
        raise ContractError(f"Неизвестный метод интегрирования α: {method}")

    slip, alpha0 = _check_rates(slip, alpha0)
    alpha = np.empty_like(slip)
    alpha[0] = alpha0
    for k in range(slip.shape[0] - 1):
        alpha[k + 1] = alpha_step(state_law, alpha[k], slip[k], slip[k + 1], dt, method)
    if not np.all(np.isfinite(alpha)):
        raise DiagnosticsError("Состояние α ушло в бесконечность: уменьшите T или dt")
    return alpha


def mild_residual(state_law: StateLaw, alpha, slip, alpha0, dt: float) -> float:
    """max_k |α_k − α0 − dt·Σ_{j<k} G(α_j, r_j)|"""
    alpha = np.asarray(alpha, dtype=float)
    slip, alpha0 = _check_rates(slip, alpha0)
    integral = np.zeros_like(alpha)
    integral[1:] = dt * np.cumsum(state_law.rate(alpha[:-1], slip[:-1]), axis=0)
    return float(np.max(np.abs(alpha - alpha0 - integral)))


# --- проходы по траектории ----------------------------------------------

def energy_balance_defect(prob: DiscreteProblem, traj: TrajectoryState) -> float:
    """
    Дефект дискретного энергетического тождества неявного Эйлера:
    max_k |½‖w_k‖²_H − ½‖w_0‖²_H − Σ_{j≤k}⟨mass(w_j − w_{j−1}), w_j⟩ + ½Σ_{j≤k}‖w_j − w_{j−1}‖²_H|.
    """
    w = traj.w
    jumps = np.diff(w, axis=0)
    energy = 0.5 * np.einsum("ki,ij,kj->k", w, prob.h_norm, w)
    work = np.concatenate([[0.0], np.cumsum(np.einsum("ki,ij,kj->k", jumps, prob.mass, w[1:]))])
    dissipation = np.concatenate([[0.0], np.cumsum(0.5 * np.einsum("ki,ij,kj->k", jumps, prob.h_norm, jumps))])
    return float(np.max(np.abs(energy - energy[0] - work + dissipation)))


def _check_inputs(prob: DiscreteProblem, kernel: HistoryKernel, config: SchemeConfig, init: InitialState) -> None:
    init.check(prob)
    if prob.n_steps != config.n_steps:
        raise ShapeError(f"Нагрузка задана на {prob.n_steps} шагах, схема требует {config.n_steps}")
    if not math.isclose(kernel.dt, config.dt, rel_tol=1e-12):
        raise ContractError(f"Шаг ядра {kernel.dt} не совпадает с dt = {config.dt}")
    if kernel.quadrature != config.quadrature:
        raise ContractError(f"Квадратура ядра '{kernel.quadrature}' не совпадает с '{config.quadrature}'")
    if not np.array_equal(kernel.u0, init.u0):
        raise ContractError("u0 ядра памяти не совпадает с начальными данными")
    if kernel.n_lags < prob.n_steps + 1:
        raise ShapeError(f"Ядро содержит {kernel.n_lags} лагов, нужно {prob.n_steps + 1}")
    if config.alpha_integrator not in ALPHA_METHODS:
        raise ContractError(f"Неизвестный метод интегрирования α: {config.alpha_integrator}")


def _solve(prob, data, w_prev, dt, laws: ContactLaws, opts: SolverOptions, w_start, k: int,
           label: str) -> StepSolution:
    try:
        return solve_step(prob, data, w_prev, dt, laws.contact, opts, w_start=w_start)
    except SolverError as e:
        raise SolverError(f"{label}: {e}", residuals=e.residuals, step=k) from e


def _picard_sweep(prob: DiscreteProblem, kernel: HistoryKernel, laws: ContactLaws, config: SchemeConfig,
                  init: InitialState, previous: TrajectoryState, opts: SolverOptions,
                  iteration: int) -> Tuple[TrajectoryState, _StepChecks]:
    dt = config.dt
    xi = kernel.eval_R_all(previous)
    eta = kernel.eval_S_phi_all(previous)
    chi = kernel.eval_S_j_all(previous)
    lagged_slip = slip_rates(prob, previous.w)

    checks = _StepChecks()
    w = np.empty_like(previous.w)
    w[0] = init.w0
    for k in range(1, prob.n_steps + 1):
        data = FrozenStepData(alpha=previous.alpha[k], xi=xi[k], eta=eta[k], g_tau=lagged_slip[k],
                              chi=chi[k], load=prob.load[k])
        solution = _solve(prob, data, w[k - 1], dt, laws, opts, previous.w[k], k,
                          f"Итерация Пикара {iteration}")
        checks.record(prob, data, solution, w[k - 1], dt, laws, config, k)
        w[k] = solution.w_new

    alpha = integrate_alpha(laws.state, slip_rates(prob, w), init.alpha0, dt, config.alpha_integrator)
    return TrajectoryState.from_velocity(w, init.u0, alpha, dt, config.quadrature), checks


def _warn_margins(condition_margins: Optional[Dict[str, float]]) -> Dict[str, float]:
    margins = dict(condition_margins or {})
    failed = [name for name, margin in margins.items() if not margin > 0]
    if failed:
        logger.warning(f"⚠️ Условия малости не выполнены: {', '.join(failed)}. "
                       f"Условие достаточное, расчет продолжается")
    return margins


def run_picard(prob: DiscreteProblem, kernel: HistoryKernel, laws: ContactLaws, config: SchemeConfig,
               init: InitialState, condition_margins: Optional[Dict[str, float]] = None
               ) -> Tuple[TrajectoryState, SchemeReport]:
    """
    Внешняя итерация Пикара: w⁰ ≡ w0, α⁰ ≡ α0; каждый проход решает
    неравенства шагов с запаздывающими данными и интегрирует α по новой
    скорости. Остановка при e_w^n + e_α^n < outer_tol·(1 + ‖w¹‖).

    :param prob: Дискретная задача
    :param kernel: Ядро памяти
    :param laws: Законы контакта и состояния
    :param config: Параметры схемы
    :param init: Начальные данные
    :param condition_margins: Запасы условий малости (только для отчета и предупреждения)
    :return: (траектория, отчет); без сходимости - лучшая итерация и converged = False
    """
    _check_inputs(prob, kernel, config, init)
    margins = _warn_margins(condition_margins)
    opts = solver_options(config)
    started = time.perf_counter()
    logger.info(f"🚀 Итерация Пикара: {prob.n_steps} шагов, dt = {config.dt:g}, допуск {config.outer_tol:g}")

    current = TrajectoryState.constant(init.w0, init.u0, init.alpha0, config.dt, prob.n_steps, config.quadrature)
    increments_w: List[float] = []
    increments_alpha: List[float] = []
    ratios: List[float] = []
    reference = 0.0
    best: Optional[Tuple[float, TrajectoryState, _StepChecks]] = None
    converged = False

    for iteration in range(1, config.max_outer + 1):
        updated, checks = _picard_sweep(prob, kernel, laws, config, init, current, opts, iteration)
        e_w = l2v_norm(prob, updated.w - current.w, config.dt)
        e_alpha = cy_norm(prob, updated.alpha - current.alpha)
        if iteration == 1:
            reference = l2v_norm(prob, updated.w, config.dt)
        else:
            previous_total = increments_w[-1] + increments_alpha[-1]
            ratios.append((e_w + e_alpha) / previous_total if previous_total > RATIO_FLOOR else math.nan)
        increments_w.append(e_w)
        increments_alpha.append(e_alpha)
        logger.info(f"⏳ Итерация {iteration}: e_w = {e_w:.3e}, e_α = {e_alpha:.3e}"
                    + (f", ρ̂ = {ratios[-1]:.3e}" if ratios else ""))

        total = e_w + e_alpha
        if best is None or total <= best[0]:
            best = (total, updated, checks)
        current = updated
        if total < config.outer_tol * (1.0 + reference):
            converged = True
            break

    if converged:
        result = current
    else:
        result, checks = best[1], best[2]
        logger.warning(f"⚠️ Итерация Пикара не сошлась за {config.max_outer} итераций, "
                       f"возвращается лучшая (приращение {best[0]:.3e})")

    report = SchemeReport(
        mode="picard",
        increments_w=tuple(increments_w),
        increments_alpha=tuple(increments_alpha),
        ratios=tuple(ratios),
        converged=converged,
        iterations=len(increments_w),
        condition_margins=margins,
        energy_defect=energy_balance_defect(prob, result),
        worst_vi_violation=checks.vi_violation,
        max_kkt_residual=checks.max_kkt,
        wall_time=time.perf_counter() - started,
    )
    logger.info(f"{'✅' if converged else '❌'} Пикар: {report.iterations} итераций, "
                f"ρ̂_∞ = {report.asymptotic_ratio:.3e}, время {report.wall_time:.2f} с")
    return result, report


def _incremental_sweep(prob: DiscreteProblem, kernel: HistoryKernel, laws: ContactLaws, config: SchemeConfig,
                       init: InitialState) -> Tuple[TrajectoryState, _StepChecks, bool]:
    """
    Один проход по времени. Данные шага k (ξ_k, η_k, χ_k, g_k, α_k)
    зависят от самого w_k, поэтому на каждом шаге решается локальная
    неподвижная точка; дискретные уравнения те же, что и в режиме Пикара.
    """
    _check_inputs(prob, kernel, config, init)
    opts = solver_options(config)
    dt = config.dt
    tol = max(1e-2 * config.outer_tol, 1e-14)
    n = prob.n_steps

    w = np.empty((n + 1, prob.n_dof))
    alpha = np.empty((n + 1, prob.n_contact))
    w[0], alpha[0] = init.w0, init.alpha0
    slip_prev = np.abs(prob.trace_tau @ w[0])
    checks = _StepChecks()
    all_converged = True

    for k in range(1, n + 1):
        guess = w[k - 1].copy()
        guess_alpha = alpha[k - 1].copy()
        for local in range(1, config.max_outer + 1):
            w[k] = guess
            slip = np.abs(prob.trace_tau @ guess)
            state = alpha_step(laws.state, alpha[k - 1], slip_prev, slip, dt, config.alpha_integrator)
            alpha[k] = state
            xi, eta, chi = kernel.evaluate_step(w[:k + 1], alpha[:k + 1])
            data = FrozenStepData(alpha=state, xi=xi, eta=eta, g_tau=slip, chi=chi, load=prob.load[k])
            solution = _solve(prob, data, w[k - 1], dt, laws, opts, guess, k, "Пошаговый режим")
            change = v_norm_of(prob, solution.w_new - guess) + contact_l2_norm(state - guess_alpha,
                                                                              prob.contact_weights)
            guess, guess_alpha = solution.w_new, state
            if change <= tol * (1.0 + v_norm_of(prob, guess)):
                break
        else:
            all_converged = False
            logger.warning(f"⚠️ Локальная итерация шага {k} не сошлась за {config.max_outer} итераций")

        checks.record(prob, data, solution, w[k - 1], dt, laws, config, k)
        w[k] = guess
        slip_prev = np.abs(prob.trace_tau @ guess)
        alpha[k] = alpha_step(laws.state, alpha[k - 1], np.abs(prob.trace_tau @ w[k - 1]), slip_prev, dt,
                              config.alpha_integrator)

    if not np.all(np.isfinite(alpha)):
        raise DiagnosticsError("Состояние α ушло в бесконечность: уменьшите T или dt")
    traj = TrajectoryState.from_velocity(w, init.u0, alpha, dt, config.quadrature)
    return traj, checks, all_converged


def run_incremental(prob: DiscreteProblem, kernel: HistoryKernel, laws: ContactLaws, config: SchemeConfig,
                    init: InitialState) -> TrajectoryState:
    """
    Пошаговый режим: история, α и трение берутся из уже вычисленного
    прошлого текущей траектории; α продвигается на шаг за шаг.

    :return: TrajectoryState
    """
    traj, _, _ = _incremental_sweep(prob, kernel, laws, config, init)
    return traj


def run_scheme(prob: DiscreteProblem, kernel: HistoryKernel, laws: ContactLaws, config: SchemeConfig,
               init: InitialState, condition_margins: Optional[Dict[str, float]] = None
               ) -> Tuple[TrajectoryState, SchemeReport]:
    """Запуск в режиме config.mode с отчетом для обоих режимов"""
    if config.mode == "picard":
        return run_picard(prob, kernel, laws, config, init, condition_margins)

    margins = _warn_margins(condition_margins)
    started = time.perf_counter()
    logger.info(f"🚀 Пошаговый режим: {prob.n_steps} шагов, dt = {config.dt:g}")
    traj, checks, converged = _incremental_sweep(prob, kernel, laws, config, init)
    report = SchemeReport(
        mode="incremental",
        increments_w=(),
        increments_alpha=(),
        ratios=(),
        converged=converged,
        iterations=1,
        condition_margins=margins,
        energy_defect=energy_balance_defect(prob, traj),
        worst_vi_violation=checks.vi_violation,
        max_kkt_residual=checks.max_kkt,
        wall_time=time.perf_counter() - started,
    )
    logger.info(f"{'✅' if converged else '❌'} Пошаговый режим завершен за {report.wall_time:.2f} с")
    return traj, report


# --- эксперименты --------------------------------------------------------

@dataclass(frozen=True)
class FlowMapRow:
    delta: float
    distance: float
    ratio: float


@dataclass(frozen=True)
class FlowMapTable:
    rows: Tuple[FlowMapRow, ...]
    horizon: float
    monotone: bool

    @property
    def distances(self) -> Tuple[float, ...]:
        return tuple(row.distance for row in self.rows)


def _restricted(prob: DiscreteProblem, config: SchemeConfig, n_steps: int) -> Tuple[DiscreteProblem, SchemeConfig]:
    return prob.with_horizon(n_steps), config.model_copy(update={"T": config.dt * n_steps})


def flow_map_experiment(prob: DiscreteProblem, kernel: HistoryKernel, laws: ContactLaws, config: SchemeConfig,
                        init: InitialState, directions: Sequence[Tuple[np.ndarray, np.ndarray]],
                        deltas: Sequence[float], slack: float = 0.05) -> FlowMapTable:
    """
    Непрерывная зависимость от начальных данных на [0, T/2]: для каждого
    δ решает задачу с данными (w0, α0) + δ·направление и записывает
    d(δ) = ‖w1 − w2‖_{L²V} + max‖α1 − α2‖ (максимум по направлениям).

    Направления нормируются так, что ‖dw‖_V + ‖dα‖_Y = 1.

    :param deltas: Строго убывающая лестница δ ≥ 0, не меньше трех ступеней
    :param slack: Допуск монотонности d(δ)
    :return: FlowMapTable
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3 or any(not b < a for a, b in zip(deltas, deltas[1:])) or min(deltas) < 0:
        raise ContractError(f"Лестница δ должна строго убывать, быть неотрицательной и иметь ≥ 3 ступеней: {deltas}")
    if not directions:
        raise ContractError("Нужно хотя бы одно направление возмущения")

    half_prob, half_config = _restricted(prob, config, max(prob.n_steps // 2, 1))
    normalized = []
    for dw, dalpha in directions:
        dw, dalpha = np.asarray(dw, dtype=float), np.asarray(dalpha, dtype=float)
        size = v_norm_of(prob, dw) + contact_l2_norm(dalpha, prob.contact_weights)
        if not size > 0:
            raise ContractError("Направление возмущения нулевое")
        normalized.append((dw / size, dalpha / size))

    base, _ = run_scheme(half_prob, kernel, laws, half_config, init)
    rows = []
    for delta in deltas:
        distance = 0.0
        for dw, dalpha in normalized:
            other, _ = run_scheme(half_prob, kernel, laws, half_config, init.perturbed(delta, dw, dalpha))
            distance = max(distance, l2v_norm(half_prob, base.w - other.w, config.dt)
                           + cy_norm(half_prob, base.alpha - other.alpha))
        rows.append(FlowMapRow(delta, distance, distance / delta if delta > 0 else math.nan))
        logger.info(f"📏 δ = {delta:.3e}: d(δ) = {distance:.6e}")

    monotone = all(b.distance <= a.distance * (1.0 + slack) for a, b in zip(rows, rows[1:]))
    if not monotone:
        logger.warning("⚠️ Расстояния d(δ) не убывают монотонно")
    return FlowMapTable(tuple(rows), half_config.T, monotone)


class HorizonSearch(NamedTuple):
    T: float
    n_steps: int
    ratio: float
    attempts: int


def find_time_horizon(prob: DiscreteProblem, kernel: HistoryKernel, laws: ContactLaws, config: SchemeConfig,
                      init: InitialState, threshold: float = 0.9, max_halvings: int = 10) -> HorizonSearch:
    """
    Делит T пополам, пока измеренное ρ̂₃ не станет меньше threshold.
    Если итерация сошлась раньше третьей, горизонт считается подходящим.

    :return: HorizonSearch
    """
    n_steps = prob.n_steps
    for attempt in range(1, max_halvings + 2):
        trial_prob, trial_config = _restricted(prob, config, n_steps)
        _, report = run_picard(trial_prob, kernel, laws, trial_config, init)
        ratio = report.ratio_at(3)
        if not ratio >= threshold:
            logger.info(f"✅ Найден горизонт T = {trial_config.T:g} (ρ̂₃ = {ratio:.3e})")
            return HorizonSearch(trial_config.T, n_steps, ratio, attempt)
        if n_steps == 1:
            break
        logger.info(f"⏳ ρ̂₃ = {ratio:.3e} ≥ {threshold}: уменьшаем T до {config.dt * (n_steps // 2):g}")
        n_steps //= 2
    raise DiagnosticsError(f"Не удалось найти горизонт с ρ̂₃ < {threshold} за {max_halvings} делений")
