#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Конечномерная полудискретная задача: операторы, следы на контактной
границе, нормы и оценки операторных норм.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat
from scipy import linalg

from src.core.exceptions import ContractError, DiagnosticsError, ShapeError
from src.utils.logger import logger

POWER_ITERATION_SEED = 42
QUADRATURE_RULES = ("right-rectangle", "trapezoid")


def frozen_array(array, dtype=float) -> np.ndarray:
    result = np.array(array, dtype=dtype, copy=True)
    result.setflags(write=False)
    return result


def _check_symmetric(matrix: np.ndarray, name: str) -> None:
    scale = max(float(np.max(np.abs(matrix))), 1.0)
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12 * scale):
        raise ContractError(f"Оператор {name} не симметричен")


def check_spd(matrix, name: str = "norm") -> np.ndarray:
    """
    Проверяет, что оператор симметричен и положительно определен.

    :param matrix: Квадратная матрица
    :param name: Имя оператора для сообщения об ошибке
    :return: Матрица как ndarray
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(f"Оператор {name} должен быть квадратным, получено {matrix.shape}")
    _check_symmetric(matrix, name)
    try:
        linalg.cholesky(matrix, lower=True)
    except linalg.LinAlgError as e:
        raise ContractError(f"Оператор {name} не положительно определен: {e}") from e
    return matrix


@dataclass(frozen=True)
class DiscreteProblem:
    """
    Все операторы полудискретной задачи.

    mass, v_norm, h_norm - SPD; trace_tau/trace_nu - отображения M и N
    степеней свободы в касательные/нормальные значения в контактных узлах;
    load - правые части f(t_k), k = 0..n_steps.
    """

    mass: np.ndarray
    visc: np.ndarray
    v_norm: np.ndarray
    h_norm: np.ndarray
    trace_tau: np.ndarray
    trace_nu: np.ndarray
    contact_weights: np.ndarray
    load: np.ndarray
    contact_dofs: Optional[np.ndarray] = None
    normal_offset: Optional[np.ndarray] = None
    visc_map: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("mass", "visc", "v_norm", "h_norm", "trace_tau", "trace_nu",
                     "contact_weights", "load"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))

        n = self.mass.shape[0] if self.mass.ndim == 2 else -1
        for name in ("mass", "visc", "v_norm", "h_norm"):
            if getattr(self, name).shape != (n, n):
                raise ShapeError(f"{name}: ожидается ({n}, {n}), получено {getattr(self, name).shape}")
        nc = self.contact_weights.shape[0]
        for name in ("trace_tau", "trace_nu"):
            if getattr(self, name).shape != (nc, n):
                raise ShapeError(f"{name}: ожидается ({nc}, {n}), получено {getattr(self, name).shape}")
        if self.load.ndim != 2 or self.load.shape[1] != n or self.load.shape[0] < 1:
            raise ShapeError(f"load: ожидается (n_steps + 1, {n}), получено {self.load.shape}")
        if np.any(self.contact_weights < 0):
            raise ContractError("Квадратурные веса контакта должны быть неотрицательны")

        for name in ("mass", "v_norm", "h_norm"):
            check_spd(getattr(self, name), name)

        mask = np.ones(n, dtype=bool) if self.contact_dofs is None else np.asarray(self.contact_dofs, dtype=bool)
        if mask.shape != (n,):
            raise ShapeError(f"contact_dofs: ожидается ({n},), получено {mask.shape}")
        outside = ~mask
        if np.any(self.trace_tau[:, outside] != 0.0) or np.any(self.trace_nu[:, outside] != 0.0):
            raise ContractError("Строки следов затрагивают степени свободы вне контактной границы")
        object.__setattr__(self, "contact_dofs", frozen_array(mask, dtype=bool))

        offset = np.zeros(nc) if self.normal_offset is None else self.normal_offset
        offset = frozen_array(offset)
        if offset.shape != (nc,):
            raise ShapeError(f"normal_offset: ожидается ({nc},), получено {offset.shape}")
        object.__setattr__(self, "normal_offset", offset)

        if not np.all(np.isfinite(self.load)):
            raise ContractError("Нагрузка содержит нечисловые значения")

    @property
    def n_dof(self) -> int:
        return self.mass.shape[0]

    @property
    def n_contact(self) -> int:
        return self.contact_weights.shape[0]

    @property
    def n_steps(self) -> int:
        return self.load.shape[0] - 1

    @property
    def contact_measure(self) -> float:
        """meas(Γ_C) как сумма квадратурных весов"""
        return float(np.sum(self.contact_weights))

    @cached_property
    def v_factor(self):
        return linalg.cho_factor(self.v_norm, lower=True)

    def with_horizon(self, n_steps: int) -> "DiscreteProblem":
        """
        Возвращает копию задачи, обрезанную до первых n_steps шагов.

        :param n_steps: Новое число шагов (не больше текущего)
        :return: DiscreteProblem
        """
        if not 1 <= n_steps <= self.n_steps:
            raise ShapeError(f"Нельзя обрезать {self.n_steps} шагов до {n_steps}")
        return replace(self, load=self.load[: n_steps + 1])


def _check_vector(x, n: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ShapeError(f"{name}: ожидается вектор длины {n}, получено {x.shape}")
    return x


def quadratic_norm(operator: np.ndarray, x) -> float:
    """
    √(xᵀ·Q·x) для SPD оператора Q.

    :param operator: Оператор нормы
    :param x: Вектор
    :return: Значение нормы
    """
    operator = np.asarray(operator, dtype=float)
    x = _check_vector(x, operator.shape[0])
    return float(np.sqrt(max(x @ operator @ x, 0.0)))


def v_norm_of(prob: DiscreteProblem, x) -> float:
    return quadratic_norm(prob.v_norm, x)


def h_norm_of(prob: DiscreteProblem, x) -> float:
    return quadratic_norm(prob.h_norm, x)


def dual_v_norm_of(prob: DiscreteProblem, xi) -> float:
    """Норма ковектора в V*: √(ξᵀ V⁻¹ ξ)"""
    xi = _check_vector(xi, prob.n_dof, "xi")
    return float(np.sqrt(max(xi @ linalg.cho_solve(prob.v_factor, xi), 0.0)))


def contact_lp_norm(values, weights, p: float = 4.0) -> float:
    """
    Взвешенная ℓᵖ норма по контактным узлам: (Σ wᵢ|yᵢ|ᵖ)^{1/p}.

    :param values: Значения в контактных узлах
    :param weights: Квадратурные веса
    :param p: Показатель
    :return: Значение нормы
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape:
        raise ShapeError(f"Значения {values.shape} и веса {weights.shape} не согласованы")
    return float(np.sum(weights * np.abs(values) ** p) ** (1.0 / p))


def contact_l2_norm(values, weights) -> float:
    """Норма пространства состояний Y (взвешенная ℓ²)"""
    return contact_lp_norm(values, weights, p=2.0)


def trace_norms(prob: DiscreteProblem, x) -> Tuple[float, float]:
    """
    Нормы следов (‖Mx‖_U, ‖Nx‖_X) во взвешенной ℓ⁴.

    :param prob: Дискретная задача
    :param x: Вектор степеней свободы
    :return: Пара норм
    """
    x = _check_vector(x, prob.n_dof)
    return (contact_lp_norm(prob.trace_tau @ x, prob.contact_weights),
            contact_lp_norm(prob.trace_nu @ x, prob.contact_weights))


def estimate_operator_norm(map_, source_norm, target_norm, tol: float = 1e-10,
                           max_iter: int = 200_000, seed: int = POWER_ITERATION_SEED) -> float:
    """
    Наибольшее обобщенное сингулярное число sup ‖Bx‖_T / ‖x‖_S
    степенным методом для пучка (BᵀTB, S).

    :param map_: Прямоугольное отображение B
    :param source_norm: SPD оператор нормы в исходном пространстве
    :param target_norm: SPD оператор нормы в целевом пространстве
    :param tol: Относительная точность по невязке собственной пары
    :param max_iter: Максимум итераций
    :param seed: Зерно начального вектора
    :return: Оценка нормы
    """
    B = np.atleast_2d(np.asarray(map_, dtype=float))
    S = check_spd(source_norm, "source_norm")
    T = check_spd(target_norm, "target_norm")
    if B.shape != (T.shape[0], S.shape[0]):
        raise ShapeError(f"Отображение {B.shape} несовместимо с нормами {T.shape}, {S.shape}")

    C = B.T @ T @ B
    if not np.any(C):
        return 0.0
    factor = linalg.cho_factor(S, lower=True)

    x = np.random.default_rng(seed).standard_normal(S.shape[0])
    x /= np.sqrt(x @ S @ x)
    for iteration in range(1, max_iter + 1):
        y = linalg.cho_solve(factor, C @ x)
        lam = float(x @ C @ x)
        r = y - lam * x
        residual = float(np.sqrt(max(r @ S @ r, 0.0)))
        if residual <= tol * lam:
            logger.debug(f"Степенной метод сошелся за {iteration} итераций, λ = {lam:.6e}")
            return float(np.sqrt(lam))
        norm_y = np.sqrt(y @ S @ y)
        if norm_y == 0.0:
            return 0.0
        x = y / norm_y

    raise DiagnosticsError(f"Степенной метод не сошелся за {max_iter} итераций")


def _lp_value_and_gradient(maps, weights, x, p):
    values = []
    grads = []
    for B in maps:
        y = B @ x
        total = float(np.sum(weights * np.abs(y) ** p))
        value = total ** (1.0 / p)
        if value == 0.0:
            grads.append(np.zeros_like(x))
        else:
            grads.append(value ** (1.0 - p) * (B.T @ (weights * np.abs(y) ** (p - 2.0) * y)))
        values.append(value)
    value = float(np.sqrt(sum(v * v for v in values)))
    if value == 0.0:
        return 0.0, np.zeros_like(x)
    grad = sum((v / value) * g for v, g in zip(values, grads))
    return value, grad


def estimate_lp_operator_norm(maps: Sequence[np.ndarray], weights, source_norm, p: float = 4.0,
                              tol: float = 1e-8, max_iter: int = 5000, n_starts: int = 8,
                              seed: int = POWER_ITERATION_SEED) -> float:
    """
    Норма отображения в пространство со взвешенной ℓᵖ нормой (для
    нескольких отображений - в произведение с евклидовой комбинацией норм)
    градиентным подъемом на единичной V-сфере.

    Каждый шаг максимизирует линеаризацию выпуклой целевой функции на
    эллипсоиде, поэтому значение не убывает. Результат - лучший из
    нескольких стартов.

    :param maps: Список отображений с общим числом столбцов
    :param weights: Веса контактных узлов
    :param source_norm: SPD оператор нормы V
    :param p: Показатель ℓᵖ
    :param tol: Относительный порог прироста
    :param max_iter: Максимум итераций на один старт
    :param n_starts: Число случайных стартов
    :param seed: Зерно генератора
    :return: Оценка нормы
    """
    S = check_spd(source_norm, "source_norm")
    maps = [np.atleast_2d(np.asarray(B, dtype=float)) for B in maps]
    weights = np.asarray(weights, dtype=float)
    for B in maps:
        if B.shape != (weights.shape[0], S.shape[0]):
            raise ShapeError(f"Отображение {B.shape} несовместимо с весами {weights.shape} и нормой {S.shape}")
    if not any(np.any(B) for B in maps):
        return 0.0

    factor = linalg.cho_factor(S, lower=True)
    rng = np.random.default_rng(seed)
    best = 0.0
    for start in range(n_starts):
        x = rng.standard_normal(S.shape[0])
        x /= np.sqrt(x @ S @ x)
        value, grad = _lp_value_and_gradient(maps, weights, x, p)
        for _ in range(max_iter):
            direction = linalg.cho_solve(factor, grad)
            norm_d = np.sqrt(direction @ S @ direction)
            if norm_d == 0.0:
                break
            x = direction / norm_d
            new_value, grad = _lp_value_and_gradient(maps, weights, x, p)
            if new_value - value <= tol * max(new_value, 1e-300):
                value = max(value, new_value)
                break
            value = new_value
        else:
            raise DiagnosticsError(f"Градиентный подъем не сошелся за {max_iter} итераций (старт {start})")
        best = max(best, value)

    logger.debug(f"Оценка ℓ^{p:g} нормы следа: {best:.6e}")
    return float(best)


def coercivity_constant(visc, v_norm) -> float:
    """
    Наименьшее обобщенное собственное число sym(visc) относительно v_norm
    (оценка m_A). Для незнакоопределенного оператора результат ≤ 0.

    :param visc: Оператор вязкости
    :param v_norm: SPD оператор нормы V
    :return: m_A
    """
    visc = np.asarray(visc, dtype=float)
    v_norm = check_spd(v_norm, "v_norm")
    if visc.shape != v_norm.shape:
        raise ShapeError(f"visc {visc.shape} и v_norm {v_norm.shape} не согласованы")
    sym = 0.5 * (visc + visc.T)
    return float(linalg.eigh(sym, v_norm, eigvals_only=True, subset_by_index=[0, 0])[0])


def relative_operator_bound(operator, v_norm) -> float:
    """
    Норма симметричного оператора как отображения V → V*:
    max |λ| обобщенной задачи (operator, v_norm).
    """
    operator = np.asarray(operator, dtype=float)
    v_norm = check_spd(v_norm, "v_norm")
    sym = 0.5 * (operator + operator.T)
    eigenvalues = linalg.eigh(sym, v_norm, eigvals_only=True)
    return float(np.max(np.abs(eigenvalues)))


class ConstantsRecord(BaseModel):
    """
    Константы гипотез: коэрцитивность, константы φ и j, константы
    историй, L_G и нормы следов.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    m_A: NonNegativeFloat
    m_j: NonNegativeFloat = 0.0
    m_j_bar: NonNegativeFloat = 0.0
    beta: Tuple[NonNegativeFloat, NonNegativeFloat, NonNegativeFloat, NonNegativeFloat,
                NonNegativeFloat, NonNegativeFloat, NonNegativeFloat] = Field(default=(0.0,) * 7)
    c_R: NonNegativeFloat = 0.0
    c_S_phi: NonNegativeFloat = 0.0
    c_S_j: NonNegativeFloat = 0.0
    L_G: NonNegativeFloat = 0.0
    op_norm_M: NonNegativeFloat = 0.0
    op_norm_N: NonNegativeFloat = 0.0
    op_norm_K: NonNegativeFloat = 0.0

    def beta_i(self, index: int) -> float:
        """β_i с нумерацией от 1"""
        return self.beta[index - 1]


def accumulate_displacement(w, u0, dt: float, quadrature: str = "right-rectangle") -> np.ndarray:
    """
    Перемещения u_k = u0 + ∫₀^{t_k} w по выбранной квадратуре.

    right-rectangle: u_k = u0 + dt·Σ_{j=1..k} w_j, на [t_{j-1}, t_j] берется
    правое значение w_j (согласовано с неявным Эйлером);
    trapezoid: u_k = u0 + dt·Σ_{j=1..k} (w_{j-1} + w_j)/2.
    """
    w = np.asarray(w, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    if w.ndim != 2 or u0.shape != (w.shape[1],):
        raise ShapeError(f"w {w.shape} и u0 {u0.shape} не согласованы")
    if quadrature == "right-rectangle":
        increments = w[1:]
    elif quadrature == "trapezoid":
        increments = 0.5 * (w[:-1] + w[1:])
    else:
        raise ContractError(f"Неизвестная квадратура: {quadrature}")
    u = np.empty_like(w)
    u[0] = u0
    u[1:] = u0 + dt * np.cumsum(increments, axis=0)
    return u


@dataclass(frozen=True)
class TrajectoryState:
    """
    Временные выборки скорости w, перемещений u и состояния α
    для одной внешней итерации.
    """

    dt: float
    w: np.ndarray
    u: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        for name in ("w", "u", "alpha"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))
        if self.w.ndim != 2 or self.u.shape != self.w.shape:
            raise ShapeError(f"w {self.w.shape} и u {self.u.shape} не согласованы")
        if self.alpha.ndim != 2 or self.alpha.shape[0] != self.w.shape[0]:
            raise ShapeError(f"alpha {self.alpha.shape} не согласовано с числом шагов {self.w.shape[0] - 1}")
        if not self.dt > 0:
            raise ContractError(f"Шаг по времени должен быть положителен: {self.dt}")

    @property
    def n_steps(self) -> int:
        return self.w.shape[0] - 1

    @property
    def n_dof(self) -> int:
        return self.w.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    @classmethod
    def from_velocity(cls, w, u0, alpha, dt: float, quadrature: str = "right-rectangle") -> "TrajectoryState":
        """Собирает траекторию, восстанавливая перемещения по скоростям"""
        return cls(dt=dt, w=w, u=accumulate_displacement(w, u0, dt, quadrature), alpha=alpha)

    @classmethod
    def constant(cls, w0, u0, alpha0, dt: float, n_steps: int,
                 quadrature: str = "right-rectangle") -> "TrajectoryState":
        """Начальное приближение w ≡ w0, α ≡ α0"""
        w = np.tile(np.asarray(w0, dtype=float), (n_steps + 1, 1))
        alpha = np.tile(np.asarray(alpha0, dtype=float), (n_steps + 1, 1))
        return cls.from_velocity(w, u0, alpha, dt, quadrature)


def l2v_norm(prob: DiscreteProblem, w_diff, dt: float) -> float:
    """
    Дискретная норма L²(0,T;V): √(dt·Σ_{k=1..N} ‖w_k‖²_V).
    Нулевая выборка фиксирована начальным условием и не входит в сумму.
    """
    w_diff = np.asarray(w_diff, dtype=float)
    squares = np.einsum("ki,ij,kj->k", w_diff[1:], prob.v_norm, w_diff[1:])
    return float(np.sqrt(dt * np.sum(np.maximum(squares, 0.0))))


def cy_norm(prob: DiscreteProblem, alpha_diff) -> float:
    """Дискретная норма C([0,T];Y): максимум по k взвешенной ℓ² нормы"""
    alpha_diff = np.asarray(alpha_diff, dtype=float)
    if alpha_diff.size == 0:
        return 0.0
    return float(np.sqrt(np.max(alpha_diff ** 2 @ prob.contact_weights)))
