#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Операторы с памятью вдоль сохраненной траектории: оператор Вольтерры
𝓡 (упругость + релаксация), накопленное нормальное перемещение 𝒮_φ и
слот 𝒮_j (по умолчанию нулевой).
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg

from src.core.discrete import (DiscreteProblem, QUADRATURE_RULES, TrajectoryState, frozen_array,
                               contact_lp_norm, dual_v_norm_of, estimate_lp_operator_norm,
                               relative_operator_bound, v_norm_of)
from src.core.exceptions import ContractError, ShapeError
from src.utils.logger import logger


def quadrature_weights(n: int, quadrature: str) -> np.ndarray:
    """
    Веса ∫₀^{t_k} f ≈ dt·Σ_j ω_j f_j по выборкам j = 0..k (без множителя dt).
    Неотрицательны и в сумме дают k. right-rectangle берет правый конец
    каждого отрезка, так что выборка j = 0 не входит.
    """
    weights = np.zeros(n + 1)
    if n == 0:
        return weights
    if quadrature == "right-rectangle":
        weights[1:] = 1.0
    elif quadrature == "trapezoid":
        weights[:] = 1.0
        weights[[0, -1]] = 0.5
    else:
        raise ContractError(f"Неизвестная квадратура: {quadrature}")
    return weights


def _causal_matrix(profile: np.ndarray, n_steps: int, quadrature: str) -> np.ndarray:
    """
    Нижнетреугольная матрица Q[k, j] = ω_{k,j}·profile[k − j], j ≤ k.
    """
    if quadrature not in QUADRATURE_RULES:
        raise ContractError(f"Неизвестная квадратура: {quadrature}")
    size = n_steps + 1
    matrix = np.tril(linalg.toeplitz(profile[:size]))
    if quadrature == "right-rectangle":
        matrix[:, 0] = 0.0
    else:
        matrix[:, 0] *= 0.5
        matrix[np.arange(size), np.arange(size)] *= 0.5
        matrix[0, 0] = 0.0
    return matrix


@dataclass(frozen=True)
class HistoryKernel:
    """
    Ядро памяти: оператор упругости, разделимое ядро релаксации
    c(t_k − t_j) = profile[k − j]·relaxation_operator, след N, u0 и
    квадратура.
    """

    dt: float
    elasticity: np.ndarray
    relaxation_operator: np.ndarray
    relaxation_profile: np.ndarray
    trace_nu: np.ndarray
    u0: np.ndarray
    quadrature: str = "right-rectangle"
    normal_offset: Optional[np.ndarray] = None
    s_j: Optional[Callable[[TrajectoryState, int], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("elasticity", "relaxation_operator", "relaxation_profile", "trace_nu", "u0"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))
        n = self.u0.shape[0]
        for name in ("elasticity", "relaxation_operator"):
            if getattr(self, name).shape != (n, n):
                raise ShapeError(f"{name}: ожидается ({n}, {n}), получено {getattr(self, name).shape}")
        if self.trace_nu.ndim != 2 or self.trace_nu.shape[1] != n:
            raise ShapeError(f"trace_nu {self.trace_nu.shape} несовместим с u0 {self.u0.shape}")
        if self.quadrature not in QUADRATURE_RULES:
            raise ContractError(f"Неизвестная квадратура: {self.quadrature}")
        offset = np.zeros(self.trace_nu.shape[0]) if self.normal_offset is None else self.normal_offset
        object.__setattr__(self, "normal_offset", frozen_array(offset))

    @property
    def n_lags(self) -> int:
        return self.relaxation_profile.shape[0]

    @classmethod
    def for_problem(cls, prob: DiscreteProblem, dt: float, elasticity, relaxation_operator=None,
                    relaxation_profile=None, u0=None, quadrature: str = "right-rectangle",
                    s_j=None) -> "HistoryKernel":
        """
        Ядро, согласованное с задачей (след N и смещение нормали берутся из нее).
        """
        n = prob.n_dof
        return cls(
            dt=dt,
            elasticity=elasticity,
            relaxation_operator=np.zeros((n, n)) if relaxation_operator is None else relaxation_operator,
            relaxation_profile=np.zeros(prob.n_steps + 1) if relaxation_profile is None else relaxation_profile,
            trace_nu=prob.trace_nu,
            u0=np.zeros(n) if u0 is None else u0,
            quadrature=quadrature,
            normal_offset=prob.normal_offset,
            s_j=s_j,
        )

    def relaxation_sample(self, lag: int) -> np.ndarray:
        """Оператор c(lag·dt)"""
        return self.relaxation_profile[lag] * self.relaxation_operator

    def _check_trajectory(self, traj: TrajectoryState) -> None:
        if traj.n_dof != self.u0.shape[0]:
            raise ShapeError(f"Траектория с {traj.n_dof} степенями свободы, ядро - {self.u0.shape[0]}")
        if traj.n_steps + 1 > self.n_lags:
            raise ShapeError(f"Ядро содержит {self.n_lags} лагов, траектория - {traj.n_steps} шагов")

    def accumulated_displacement(self, traj: TrajectoryState) -> np.ndarray:
        """u0 + ∫₀^{t_k} w по квадратуре ядра для всех k"""
        weights = _causal_matrix(np.ones(traj.n_steps + 1), traj.n_steps, self.quadrature)
        return self.u0 + traj.dt * (weights @ traj.w)

    def eval_R_all(self, traj: TrajectoryState) -> np.ndarray:
        """
        ξ_k для всех k: elasticity·(u0 + dt·Σ ω w_j) + dt·Σ ω c(t_k − t_j) w_j.
        """
        self._check_trajectory(traj)
        xi = self.accumulated_displacement(traj) @ self.elasticity.T
        if np.any(self.relaxation_profile):
            memory = _causal_matrix(self.relaxation_profile, traj.n_steps, self.quadrature)
            xi = xi + traj.dt * (memory @ traj.w) @ self.relaxation_operator.T
        return xi

    def eval_S_phi_all(self, traj: TrajectoryState) -> np.ndarray:
        """η_k для всех k: γ_ν(u0 + ∫ w) плюс заданное смещение нормали"""
        self._check_trajectory(traj)
        return self.accumulated_displacement(traj) @ self.trace_nu.T + self.normal_offset

    def eval_S_j_all(self, traj: TrajectoryState) -> np.ndarray:
        """Слот 𝒮_j; без заданного оператора - нули"""
        if self.s_j is None:
            return np.zeros((traj.n_steps + 1, self.trace_nu.shape[0]))
        return np.array([self.s_j(traj, k) for k in range(traj.n_steps + 1)])

    def evaluate_step(self, w_prefix, alpha_prefix=None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        (ξ_k, η_k, χ_k) на последней выборке префикса w_0..w_k.
        Совпадает с k-й строкой eval_*_all, но стоит O(k).

        :param w_prefix: Скорости w_0..w_k
        :param alpha_prefix: Состояния α_0..α_k (нужны только для 𝒮_j)
        :return: Тройка (ξ_k, η_k, χ_k)
        """
        w_prefix = np.asarray(w_prefix, dtype=float)
        if w_prefix.ndim != 2 or w_prefix.shape[1] != self.u0.shape[0]:
            raise ShapeError(f"Префикс скоростей {w_prefix.shape} несовместим с ядром")
        k = w_prefix.shape[0] - 1
        if k + 1 > self.n_lags:
            raise ShapeError(f"Ядро содержит {self.n_lags} лагов, запрошен шаг {k}")
        weights = quadrature_weights(k, self.quadrature)
        u = self.u0 + self.dt * (weights @ w_prefix)
        xi = self.elasticity @ u
        if np.any(self.relaxation_profile):
            lagged = weights * self.relaxation_profile[k::-1]
            xi = xi + self.dt * (self.relaxation_operator @ (lagged @ w_prefix))
        eta = self.trace_nu @ u + self.normal_offset
        if self.s_j is None:
            chi = np.zeros(self.trace_nu.shape[0])
        else:
            traj = TrajectoryState.from_velocity(w_prefix, self.u0, alpha_prefix, self.dt, self.quadrature)
            chi = np.asarray(self.s_j(traj, k), dtype=float)
        return xi, eta, chi


def _check_index(traj: TrajectoryState, k: int) -> None:
    if not 0 <= k <= traj.n_steps:
        raise IndexError(f"Шаг {k} вне диапазона 0..{traj.n_steps}")


def eval_R(kernel: HistoryKernel, traj: TrajectoryState, k: int) -> np.ndarray:
    """
    Ковектор ξ_k = 𝓡w(t_k) по префиксу траектории w_0..w_k.

    :param kernel: Ядро памяти
    :param traj: Траектория
    :param k: Индекс шага
    :return: Ковектор длины n_dof
    """
    _check_index(traj, k)
    xi, _, _ = kernel.evaluate_step(traj.w[: k + 1])
    return xi


def eval_S_phi(kernel: HistoryKernel, traj: TrajectoryState, k: int) -> np.ndarray:
    """Нормальные перемещения η_k = 𝒮_φ w(t_k) в контактных узлах"""
    _check_index(traj, k)
    _, eta, _ = kernel.evaluate_step(traj.w[: k + 1])
    return eta


def eval_S_j(kernel: HistoryKernel, traj: TrajectoryState, k: int) -> np.ndarray:
    _check_index(traj, k)
    if kernel.s_j is None:
        return np.zeros(kernel.trace_nu.shape[0])
    return np.asarray(kernel.s_j(traj, k), dtype=float)


class HistoryProbe(NamedTuple):
    c_R: float
    c_S_phi: float
    bound_R: float
    bound_S_phi: float
    n_ratios: int

    @property
    def holds(self) -> bool:
        slack = 1e-10
        return (self.c_R <= self.bound_R * (1 + slack) + slack
                and self.c_S_phi <= self.bound_S_phi * (1 + slack) + slack)


def analytic_history_bound(kernel: HistoryKernel, prob: DiscreteProblem) -> float:
    """
    c_R ≤ ‖elasticity‖_{V→V*} + max_lag ‖c(lag)‖_{V→V*}.
    """
    bound = relative_operator_bound(kernel.elasticity, prob.v_norm)
    if np.any(kernel.relaxation_profile):
        bound += float(np.max(np.abs(kernel.relaxation_profile))) * \
            relative_operator_bound(kernel.relaxation_operator, prob.v_norm)
    return bound


def history_lipschitz_probe(kernel: HistoryKernel, prob: DiscreteProblem, n_trials: int,
                            n_steps: int = 8, seed: int = 42, trace_nu_norm: Optional[float] = None) -> HistoryProbe:
    """
    Измеряет c_R и c_Sφ по случайным парам траекторий:
    max ‖𝓡v₁(t_k) − 𝓡v₂(t_k)‖_{V*} / (dt·Σ‖v₁ − v₂‖_V) и аналогично
    для 𝒮_φ в норме X.

    :param kernel: Ядро памяти
    :param prob: Задача (нормы V и X)
    :param n_trials: Число случайных пар
    :param n_steps: Длина пробных траекторий
    :param seed: Зерно генератора
    :param trace_nu_norm: ‖N‖_{V→X}, если уже оценена (граница для c_Sφ)
    :return: HistoryProbe
    """
    if n_trials < 1:
        raise ContractError("n_trials должно быть ≥ 1")
    n_steps = min(n_steps, kernel.n_lags - 1)
    rng = np.random.default_rng(seed)
    alpha = np.zeros((n_steps + 1, prob.n_contact))

    c_R = 0.0
    c_S = 0.0
    count = 0
    for _ in range(n_trials):
        w1 = rng.standard_normal((n_steps + 1, prob.n_dof))
        w2 = w1.copy()
        changed = rng.integers(0, n_steps + 1)
        w2[changed:] += rng.standard_normal((n_steps + 1 - changed, prob.n_dof))
        traj1 = TrajectoryState.from_velocity(w1, kernel.u0, alpha, kernel.dt, kernel.quadrature)
        traj2 = TrajectoryState.from_velocity(w2, kernel.u0, alpha, kernel.dt, kernel.quadrature)
        xi_diff = kernel.eval_R_all(traj1) - kernel.eval_R_all(traj2)
        eta_diff = kernel.eval_S_phi_all(traj1) - kernel.eval_S_phi_all(traj2)
        norms = np.array([v_norm_of(prob, d) for d in w1 - w2])
        for k in range(1, n_steps + 1):
            denominator = kernel.dt * float(quadrature_weights(k, kernel.quadrature) @ norms[:k + 1])
            if denominator <= 1e-14:
                continue
            c_R = max(c_R, dual_v_norm_of(prob, xi_diff[k]) / denominator)
            c_S = max(c_S, contact_lp_norm(eta_diff[k], prob.contact_weights) / denominator)
            count += 1

    if trace_nu_norm is None:
        trace_nu_norm = estimate_lp_operator_norm([prob.trace_nu], prob.contact_weights, prob.v_norm)
    probe = HistoryProbe(c_R, c_S, analytic_history_bound(kernel, prob), trace_nu_norm, count)
    logger.debug(f"Проверка липшицевости истории: c_R = {c_R:.6e} (граница {probe.bound_R:.6e}), "
                 f"c_Sφ = {c_S:.6e} (граница {probe.bound_S_phi:.6e})")
    return probe
