#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Решатель вариационно-гемивариационного неравенства одного шага по
времени: минимизация негладкого выпуклого функционала

    J(w) = ½⟨Qw, w⟩ − ⟨b, w⟩ + Σ gᵢ·|(Rw)ᵢ|,

где Q = mass/dt + visc (+ квадратичная часть j_ν), строки R - касательные
(и, для j_ν = κ|r|, нормальные) следы, gᵢ ≥ 0 - границы трения.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy import linalg

from src.core.discrete import DiscreteProblem, frozen_array
from src.core.exceptions import ContractError, SolverError
from src.core.friction import ComplianceLaw, DampedResponseLaw, FrictionLaw
from src.utils.logger import logger


@dataclass(frozen=True)
class NormalCompliance:
    """Нормальная податливость p(η) и трение μ·p(η)·|w_τ|"""

    compliance: ComplianceLaw
    friction: FrictionLaw
    name = "compliance"


@dataclass(frozen=True)
class DampedResponse:
    """Нормальный демпфированный отклик j_ν(w_ν) и трение μ·|w_τ|"""

    damping: DampedResponseLaw
    friction: FrictionLaw
    name = "damped"


ContactModel = Union[NormalCompliance, DampedResponse]


@dataclass(frozen=True)
class FrozenStepData:
    """
    Замороженные данные шага: α̃, ξ (из 𝓡), η (из 𝒮_φ), g (запаздывающие
    скорости скольжения), χ (из 𝒮_j) и нагрузка ℓ_k.
    """

    alpha: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    g_tau: np.ndarray
    chi: np.ndarray
    load: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "xi", "eta", "g_tau", "chi", "load"):
            value = frozen_array(getattr(self, name))
            if not np.all(np.isfinite(value)):
                raise ContractError(f"Данные шага {name} содержат нечисловые значения")
            object.__setattr__(self, name, value)
        if np.any(self.g_tau < 0):
            raise ContractError("Запаздывающие скорости скольжения должны быть неотрицательны")


@dataclass(frozen=True)
class StepSolution:
    w_new: np.ndarray
    regimes: Tuple[str, ...]
    kkt_residual: float
    iterations: int
    residual_history: Tuple[float, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class SolverOptions:
    kkt_tol: float = 1e-10
    relative_kkt: bool = False      # допуск kkt_tol·max(1, ‖b‖_V*) вместо абсолютного
    max_iter: int = 200
    eps_start: float = 1e-2
    eps_end: float = 1e-10
    n_eps: int = 5
    max_polish: int = 50
    nonlinear_visc: bool = False
    max_visc_iter: int = 100


@dataclass(frozen=True)
class StepFunctional:
    """Данные минимизируемого функционала шага"""

    matrix: np.ndarray
    rhs: np.ndarray
    rows: np.ndarray
    bounds: np.ndarray
    n_tangential: int

    def energy(self, w) -> float:
        w = np.asarray(w, dtype=float)
        return float(0.5 * w @ self.matrix @ w - self.rhs @ w + self.bounds @ np.abs(self.rows @ w))


def contact_pressure(prob: DiscreteProblem, data: FrozenStepData, model: ContactModel) -> np.ndarray:
    """Нормальное давление в узлах (0 для демпфированного отклика)"""
    if isinstance(model, NormalCompliance):
        return model.compliance.pressure(data.eta)
    return np.zeros(prob.n_contact)


def friction_bounds(prob: DiscreteProblem, data: FrozenStepData, model: ContactModel) -> np.ndarray:
    """Границы трения weight·μ(g, α̃)·p(η) или weight·μ(g, α̃)"""
    mu = np.broadcast_to(model.friction.mu(data.g_tau, data.alpha), (prob.n_contact,))
    if isinstance(model, NormalCompliance):
        bounds = prob.contact_weights * mu * contact_pressure(prob, data, model)
    else:
        bounds = prob.contact_weights * mu
    if np.any(bounds < 0):
        raise ContractError("Отрицательная граница трения")
    return np.asarray(bounds, dtype=float)


def build_step_functional(prob: DiscreteProblem, data: FrozenStepData, w_prev, dt: float,
                          model: ContactModel, visc: Optional[np.ndarray] = None) -> StepFunctional:
    """
    Собирает Q, b, строки R и границы g функционала шага.

    :param prob: Дискретная задача
    :param data: Замороженные данные
    :param w_prev: Скорость на предыдущем шаге
    :param dt: Шаг по времени
    :param model: Модель контакта
    :param visc: Линейный оператор вязкости (по умолчанию prob.visc)
    :return: StepFunctional
    """
    if not dt > 0:
        raise ContractError(f"Шаг по времени должен быть положителен: {dt}")
    w_prev = np.asarray(w_prev, dtype=float)
    visc = prob.visc if visc is None else visc
    inertia = prob.mass / dt
    matrix = inertia + visc
    rhs = inertia @ w_prev + data.load - data.xi
    rows = [prob.trace_tau]
    bounds = [friction_bounds(prob, data, model)]

    if isinstance(model, NormalCompliance):
        rhs = rhs - prob.trace_nu.T @ (prob.contact_weights * contact_pressure(prob, data, model))
    elif isinstance(model, DampedResponse):
        if not getattr(model.damping, "convex", False):
            raise ContractError("Суперпотенциал j_ν должен быть объявлен выпуклым")
        quad, absolute = model.damping.split()
        if quad:
            matrix = matrix + prob.trace_nu.T @ np.diag(prob.contact_weights * quad) @ prob.trace_nu
        if absolute:
            rows.append(prob.trace_nu)
            bounds.append(prob.contact_weights * absolute)
    else:
        raise ContractError(f"Неизвестная модель контакта: {type(model).__name__}")

    return StepFunctional(matrix, rhs, np.vstack(rows), np.concatenate(bounds), prob.n_contact)


class _CoreResult:
    def __init__(self, w, stick, multipliers, iterations, history):
        self.w = w
        self.stick = stick
        self.multipliers = multipliers
        self.iterations = iterations
        self.history = history


def _regularized_newton(Q, b, R, g, w, opts: SolverOptions, history: List[float]) -> Tuple[np.ndarray, int, float]:
    """
    Продолжение по ε для |x|_ε = √(x² + ε²): метод Ньютона с
    линейным поиском Армихо на каждом уровне ε.
    """
    scale = max(float(np.max(np.abs(R @ w))), float(np.max(np.abs(R @ linalg.solve(Q, b, assume_a="pos")))))
    scale = scale if scale > 0 else 1.0
    levels = scale * np.geomspace(opts.eps_start, opts.eps_end, opts.n_eps)
    iterations = 0

    for eps in levels:
        def energy(x):
            y = R @ x
            return 0.5 * x @ Q @ x - b @ x + g @ np.sqrt(y * y + eps * eps)

        for _ in range(opts.max_iter):
            y = R @ w
            s = np.sqrt(y * y + eps * eps)
            grad = Q @ w - b + R.T @ (g * y / s)
            hessian = Q + R.T @ ((g * eps * eps / s ** 3)[:, None] * R)
            step = -linalg.solve(hessian, grad, assume_a="pos")
            decrement = float(-grad @ step)
            iterations += 1
            history.append(float(np.sqrt(max(decrement, 0.0))))
            if float(np.max(np.abs(step))) <= 1e-3 * eps or decrement <= 1e-30:
                w = w + step
                break
            t = 1.0
            current = energy(w)
            while energy(w + t * step) > current - 1e-4 * t * decrement and t > 1e-12:
                t *= 0.5
            w = w + t * step
            if iterations >= opts.max_iter:
                break
        if iterations >= opts.max_iter:
            break
    return w, iterations, float(levels[-1])


def _polish(Q, b, R, g, stick, signs, opts: SolverOptions, history: List[float]):
    """
    Активные множества: узлы прилипания (Rw)ᵢ = 0 с множителями λᵢ,
    узлы скольжения с силой gᵢ·sᵢ. Возвращает решение или None при
    зацикливании.
    """
    n = Q.shape[0]
    stick = stick.copy()
    signs = signs.copy()
    for iteration in range(1, opts.max_polish + 1):
        S = np.flatnonzero(stick)
        P = np.flatnonzero(~stick)
        rhs = b - R[P].T @ (g[P] * signs[P])
        if S.size:
            saddle = np.block([[Q, R[S].T], [R[S], np.zeros((S.size, S.size))]])
            try:
                solution = linalg.solve(saddle, np.concatenate([rhs, np.zeros(S.size)]), assume_a="sym")
            except linalg.LinAlgError:
                solution = linalg.lstsq(saddle, np.concatenate([rhs, np.zeros(S.size)]))[0]
            w, lam = solution[:n], solution[n:]
        else:
            w, lam = linalg.solve(Q, rhs, assume_a="pos"), np.zeros(0)

        y = R @ w
        y_tol = 1e-14 * max(1.0, float(np.max(np.abs(y))) if y.size else 1.0)
        to_slip = np.abs(lam) > g[S] * (1.0 + 1e-12) + 1e-300
        to_stick = y[P] * signs[P] < -y_tol
        history.append(float(np.max(np.abs(lam) - g[S], initial=0.0)))
        if not to_slip.any() and not to_stick.any():
            multipliers = g * signs
            multipliers[S] = lam
            return w, stick, multipliers, iteration
        stick[S[to_slip]] = False
        signs[S[to_slip]] = np.sign(lam[to_slip])
        stick[P[to_stick]] = True
    return None


def _solve_core(Q, b, R, g, w_start, opts: SolverOptions) -> _CoreResult:
    history: List[float] = []
    active = np.flatnonzero((g > 0) & np.any(R != 0.0, axis=1))
    if active.size == 0:
        w = linalg.solve(Q, b, assume_a="pos")
        return _CoreResult(w, np.zeros(R.shape[0], dtype=bool), np.zeros(R.shape[0]), 1, history)

    Ra, ga = R[active], g[active]

    def expand(stick_a, mult_a):
        stick = np.zeros(R.shape[0], dtype=bool)
        mult = np.zeros(R.shape[0])
        stick[active] = stick_a
        mult[active] = mult_a
        return stick, mult

    iterations = 0
    # прогноз активного множества из стартовой точки
    if w_start is not None:
        y = Ra @ w_start
        guess = _polish(Q, b, Ra, ga, np.abs(y) <= 1e-14 * max(1.0, float(np.max(np.abs(y)))),
                        np.where(y >= 0, 1.0, -1.0), opts, history)
        if guess is not None:
            w, stick_a, mult_a, used = guess
            stick, mult = expand(stick_a, mult_a)
            return _CoreResult(w, stick, mult, used, history)
        iterations += opts.max_polish

    w0 = linalg.solve(Q, b, assume_a="pos") if w_start is None else np.asarray(w_start, dtype=float)
    w, newton_iters, eps = _regularized_newton(Q, b, Ra, ga, w0, opts, history)
    iterations += newton_iters
    y = Ra @ w
    stick_a = np.abs(y) <= 10.0 * eps
    guess = _polish(Q, b, Ra, ga, stick_a, np.where(y >= 0, 1.0, -1.0), opts, history)
    if guess is None:
        raise SolverError("Метод активных множеств зациклился", residuals=history)
    w, stick_a, mult_a, used = guess
    stick, mult = expand(stick_a, mult_a)
    return _CoreResult(w, stick, mult, iterations + used, history)


def _kkt_residual(prob: DiscreteProblem, functional: StepFunctional, w, stick, multipliers) -> float:
    """
    Невязка условий оптимальности: стационарность в двойственной
    V-норме плюс превышение границы трения в узлах прилипания.
    """
    stationarity = functional.matrix @ w - functional.rhs + functional.rows.T @ multipliers
    dual = float(np.sqrt(max(stationarity @ linalg.cho_solve(prob.v_factor, stationarity), 0.0)))
    excess = np.abs(multipliers[stick]) - functional.bounds[stick]
    return dual + float(np.max(excess, initial=0.0))


def _regimes(functional: StepFunctional, stick: np.ndarray) -> Tuple[str, ...]:
    tags = []
    for i in range(functional.n_tangential):
        if functional.bounds[i] == 0.0 or not np.any(functional.rows[i]):
            tags.append("open")
        elif stick[i]:
            tags.append("stick")
        else:
            tags.append("slip")
    return tuple(tags)


def solve_step(prob: DiscreteProblem, data: FrozenStepData, w_prev, dt: float, contact_model: ContactModel,
               opts: SolverOptions = SolverOptions(), w_start=None) -> StepSolution:
    """
    Решает неравенство шага: находит новую скорость как минимизатор
    негладкого выпуклого функционала.

    :param prob: Дискретная задача
    :param data: Замороженные данные шага
    :param w_prev: Скорость на предыдущем шаге
    :param dt: Шаг по времени
    :param contact_model: NormalCompliance или DampedResponse
    :param opts: Параметры решателя
    :param w_start: Начальное приближение (по умолчанию w_prev)
    :return: StepSolution
    """
    w_prev = np.asarray(w_prev, dtype=float)
    if w_prev.shape != (prob.n_dof,):
        raise ContractError(f"w_prev: ожидается вектор длины {prob.n_dof}")
    start = w_prev if w_start is None else np.asarray(w_start, dtype=float)

    if prob.visc_map is not None and not opts.nonlinear_visc:
        raise ContractError("Нелинейный оператор вязкости требует флага nonlinear_visc")

    if prob.visc_map is None:
        functional = build_step_functional(prob, data, w_prev, dt, contact_model)
        core = _solve_core(functional.matrix, functional.rhs, functional.rows, functional.bounds, start, opts)
        residual = _kkt_residual(prob, functional, core.w, core.stick, core.multipliers)
        iterations = core.iterations
        history = core.history
    else:
        functional, core, residual, iterations, history = _solve_nonlinear_visc(
            prob, data, w_prev, dt, contact_model, opts, start)

    tolerance = opts.kkt_tol
    if opts.relative_kkt:
        rhs_norm = float(np.sqrt(max(functional.rhs @ linalg.cho_solve(prob.v_factor, functional.rhs), 0.0)))
        tolerance *= max(1.0, rhs_norm)
    history.append(residual)
    if not residual <= tolerance:
        raise SolverError(f"Невязка KKT {residual:.3e} превышает допуск {tolerance:.3e}",
                          residuals=history)

    solution = StepSolution(core.w, _regimes(functional, core.stick), residual, iterations, tuple(history))
    logger.debug(f"Шаг решен за {iterations} итераций, невязка {residual:.3e}, режимы {solution.regimes}")
    return solution


def _solve_nonlinear_visc(prob, data, w_prev, dt, contact_model, opts, start):
    """
    Затухающая неподвижная точка для нелинейного A: линейная часть
    prob.visc служит предобуславливателем,
    w^{m+1} = argmin J с правой частью b + visc·w^m − A(w^m).
    """
    base = build_step_functional(prob, data, w_prev, dt, contact_model)
    w = np.asarray(start, dtype=float)
    history: List[float] = []
    iterations = 0
    for _ in range(opts.max_visc_iter):
        correction = prob.visc @ w - np.asarray(prob.visc_map(w), dtype=float)
        functional = StepFunctional(base.matrix, base.rhs + correction, base.rows, base.bounds, base.n_tangential)
        core = _solve_core(functional.matrix, functional.rhs, functional.rows, functional.bounds, w, opts)
        iterations += core.iterations
        change = float(np.sqrt(max((core.w - w) @ prob.v_norm @ (core.w - w), 0.0)))
        history.append(change)
        w = core.w
        if change <= 0.1 * opts.kkt_tol:
            break
    else:
        raise SolverError("Итерация для нелинейной вязкости не сошлась", residuals=history)

    # невязка с истинным оператором A
    true_functional = StepFunctional(base.matrix - prob.visc, base.rhs - np.asarray(prob.visc_map(w), dtype=float),
                                     base.rows, base.bounds, base.n_tangential)
    residual = _kkt_residual(prob, true_functional, w, core.stick, core.multipliers)
    return base, core, residual, iterations, history


def verify_vi(prob: DiscreteProblem, data: FrozenStepData, w_new, w_prev, dt: float,
              contact_model: ContactModel, n_probes: int = 4, seed: int = 42) -> float:
    """
    Подставляет тестовые v в дискретное неравенство шага и возвращает
    наименьшую левую часть (≥ −tol для решения).

    Проверяются v = 0, v = 2·w_new и n_probes случайных векторов.

    :return: Худшее (наименьшее) значение левой части
    """
    w = np.asarray(w_new, dtype=float)
    w_prev = np.asarray(w_prev, dtype=float)
    visc_apply = (lambda x: prob.visc @ x) if prob.visc_map is None else prob.visc_map
    residual = prob.mass @ (w - w_prev) / dt + np.asarray(visc_apply(w), dtype=float) + data.xi - data.load
    bounds = friction_bounds(prob, data, contact_model)
    pressure = contact_pressure(prob, data, contact_model)

    def lhs(v):
        diff = v - w
        value = residual @ diff
        value += bounds @ (np.abs(prob.trace_tau @ v) - np.abs(prob.trace_tau @ w))
        if isinstance(contact_model, NormalCompliance):
            value += (prob.contact_weights * pressure) @ (prob.trace_nu @ diff)
        else:
            value += prob.contact_weights @ contact_model.damping.dirderiv(prob.trace_nu @ w, prob.trace_nu @ diff)
        return float(value)

    probes = [np.zeros_like(w), 2.0 * w]
    rng = np.random.default_rng(seed)
    spread = max(float(np.max(np.abs(w))), 1e-3)
    probes += [w + spread * rng.standard_normal(w.shape) for _ in range(n_probes)]
    return min(lhs(v) for v in probes)
