#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Законы трения μ(r, α), законы эволюции состояния G(α, r), нормальная
податливость p и суперпотенциал демпфированного отклика j_ν вместе с
константами, нужными для проверки гипотез.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.core.exceptions import CapabilityError, ContractError, DomainError
from src.utils.logger import logger


def _as_finite(value, name: str) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{name} содержит NaN или бесконечность")
    return value


def _as_rate(r) -> np.ndarray:
    r = _as_finite(r, "r")
    if np.any(r < 0):
        raise DomainError("Скорость скольжения r должна быть неотрицательной")
    return r


def _sup(value) -> float:
    return float(np.max(np.abs(value)))


@dataclass(frozen=True)
class RsfParams:
    """
    Параметры rate-and-state: a, b, μ0 (безразмерные), v0 (м/с), L (м),
    α0 (по контактным узлам). Допускаются массивы по узлам.
    """

    a: float
    b: float
    mu0: float
    v0: float
    L: float
    alpha0: float

    def __post_init__(self):
        for name in ("a", "b", "mu0", "v0", "L", "alpha0"):
            value = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(value)):
                raise ContractError(f"Параметр {name} должен быть конечным")
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        for name in ("a", "v0", "L"):
            if np.any(getattr(self, name) <= 0):
                raise ContractError(f"Параметр {name} должен быть положительным")

    @classmethod
    def reference_set(cls, n_nodes: Optional[int] = None) -> "RsfParams":
        """
        Опорный набор: a = 0.011, b = 0.014, L = 5e-5 м, v0 = 1e-9 м/с,
        μ0 = 0.7, α0 = ln(v0/L).
        """
        alpha0 = math.log(1e-9 / 5e-5)
        if n_nodes is not None:
            alpha0 = np.full(n_nodes, alpha0)
        return cls(a=0.011, b=0.014, mu0=0.7, v0=1e-9, L=5e-5, alpha0=alpha0)

    def v_alpha(self, alpha) -> np.ndarray:
        """v_α = v0·exp(−(μ0 + bα)/a)"""
        return self.v0 * np.exp(-(self.mu0 + self.b * alpha) / self.a)

    def base_scale(self) -> np.ndarray:
        """C = exp((μ0 + bα0)/a)/(2v0) = 1/(2 v_{α0})"""
        return np.exp((self.mu0 + self.b * self.alpha0) / self.a) / (2.0 * self.v0)


class RsfConstants(NamedTuple):
    L1: float
    L2: float
    L3: float
    kappa1: float
    kappa2: float
    kappa3: float


# --- трение --------------------------------------------------------------

class FrictionLaw(ABC):
    """Коэффициент трения μ(r, α)"""

    variant = "abstract"

    def __call__(self, r, alpha) -> np.ndarray:
        return self.mu(r, alpha)

    def mu(self, r, alpha) -> np.ndarray:
        """
        :param r: Скорость скольжения ≥ 0, м/с
        :param alpha: Состояние
        :return: Коэффициент трения
        """
        return self._mu(_as_rate(r), _as_finite(alpha, "alpha"))

    @abstractmethod
    def _mu(self, r: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        pass

    def constants(self) -> RsfConstants:
        raise CapabilityError(f"Для закона '{self.variant}' нет констант H(μ) в замкнутой форме")


class RegularizedFriction(FrictionLaw):
    """μ = a·arcsinh(r/(2v_α))"""

    variant = "regularized"

    def __init__(self, params: RsfParams):
        self.params = params

    def _mu(self, r, alpha):
        p = self.params
        return p.a * np.arcsinh(r / (2.0 * p.v_alpha(alpha)))


class TruncatedFriction(FrictionLaw):
    """μ = a·log⁺(r/v_α); ровно 0 при r ≤ v_α"""

    variant = "truncated"

    def __init__(self, params: RsfParams):
        self.params = params

    def _mu(self, r, alpha):
        p = self.params
        ratio = r / p.v_alpha(alpha)
        safe = np.where(ratio > 1.0, ratio, 1.0)
        return p.a * np.log(safe)


class FirstOrderFriction(FrictionLaw):
    """
    Линеаризация регуляризованного закона по α в точке α0:
    μ = a·arcsinh(C·r·(1 + (b/a)(α − α0))), скобка обрезается снизу нулем.
    """

    variant = "first-order"

    def __init__(self, params: RsfParams):
        self.params = params

    def bracket(self, alpha) -> np.ndarray:
        p = self.params
        return 1.0 + (p.b / p.a) * (np.asarray(alpha, dtype=float) - p.alpha0)

    def _mu(self, r, alpha):
        p = self.params
        return p.a * np.arcsinh(p.base_scale() * r * np.maximum(self.bracket(alpha), 0.0))

    def constants(self) -> RsfConstants:
        """
        L1 = ‖C‖·‖a − bα0‖, L2 = L3 = ‖C‖·‖b‖,
        κ1 = √‖C‖·(‖a‖ + ‖bα0‖), κ2 = √‖C‖·‖b‖, κ3 = √‖C‖·‖a‖ (sup-нормы).
        """
        p = self.params
        scale = _sup(p.base_scale())
        root = math.sqrt(scale)
        return RsfConstants(
            L1=scale * _sup(p.a - p.b * p.alpha0),
            L2=scale * _sup(p.b),
            L3=scale * _sup(p.b),
            kappa1=root * (_sup(p.a) + _sup(p.b * p.alpha0)),
            kappa2=root * _sup(p.b),
            kappa3=root * _sup(p.a),
        )


class BoundedLipschitzFriction(FrictionLaw):
    """
    Пользовательский закон с заявленными константами.

    :param func: Функция μ(r, α) над массивами
    :param declared: Константы H(μ)
    """

    variant = "bounded-lipschitz"

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray], declared: RsfConstants):
        self.func = func
        self.declared = RsfConstants(*declared)

    def _mu(self, r, alpha):
        return np.asarray(self.func(r, alpha), dtype=float)

    def constants(self) -> RsfConstants:
        return self.declared


class ConstantFriction(BoundedLipschitzFriction):
    """Ограниченный постоянный коэффициент трения"""

    variant = "constant"

    def __init__(self, value: float):
        if not value >= 0:
            raise ContractError(f"Коэффициент трения должен быть неотрицательным: {value}")
        self.value = float(value)
        super().__init__(lambda r, alpha: np.full(np.broadcast(r, alpha).shape, self.value),
                         RsfConstants(0.0, 0.0, 0.0, self.value, 0.0, 0.0))


class TruncatedCoefficient(FrictionLaw):
    """
    Обрезка R*(μ) = min(μ, R) для неотрицательного закона.
    Липшицевы константы наследуются, оценка роста становится |μ| ≤ R.
    """

    def __init__(self, law: FrictionLaw, cap: float):
        if not cap > 0:
            raise ContractError(f"Порог обрезки должен быть положительным: {cap}")
        self.law = law
        self.cap = float(cap)
        self.variant = f"{law.variant}-capped"
        self.params = getattr(law, "params", None)

    def _mu(self, r, alpha):
        return np.minimum(self.law._mu(r, alpha), self.cap)

    def constants(self) -> RsfConstants:
        inner = self.law.constants()
        return RsfConstants(inner.L1, inner.L2, inner.L3, self.cap, 0.0, 0.0)


# --- эволюция состояния --------------------------------------------------

class StateLaw(ABC):
    """Скорость изменения состояния G(α, r)"""

    variant = "abstract"

    def __call__(self, alpha, r) -> np.ndarray:
        return self.rate(alpha, r)

    def rate(self, alpha, r) -> np.ndarray:
        """
        :param alpha: Состояние
        :param r: Скорость скольжения ≥ 0
        :return: dα/dt, 1/с
        """
        return self._rate(_as_finite(alpha, "alpha"), _as_rate(r))

    @abstractmethod
    def _rate(self, alpha: np.ndarray, r: np.ndarray) -> np.ndarray:
        pass

    def lipschitz_constant(self) -> float:
        raise CapabilityError(f"Закон '{self.variant}' не является глобально липшицевым")


class AgingLaw(StateLaw):
    """G = (v0·e^{−α} − r)/L"""

    variant = "aging"

    def __init__(self, params: RsfParams):
        self.params = params

    def _rate(self, alpha, r):
        p = self.params
        return (p.v0 * np.exp(-alpha) - r) / p.L


class SlipLaw(StateLaw):
    """G = −(r/L)(log(r/v0) + α); при r = 0 - предел 0"""

    variant = "slip"

    def __init__(self, params: RsfParams):
        self.params = params

    def _rate(self, alpha, r):
        p = self.params
        positive = r > 0
        safe = np.where(positive, r, p.v0)
        return np.where(positive, -(safe / p.L) * (np.log(safe / p.v0) + alpha), 0.0)


class FirstOrderAgingLaw(StateLaw):
    """
    Линеаризация закона старения в α0:
    G = (v0·e^{−α0}(1 − α + α0) − r)/L.
    """

    variant = "first-order-aging"

    def __init__(self, params: RsfParams):
        self.params = params

    def _rate(self, alpha, r):
        p = self.params
        return (p.v0 * np.exp(-p.alpha0) * (1.0 - alpha + p.alpha0) - r) / p.L

    def lipschitz_constant(self) -> float:
        """L_G = max(‖v0·e^{−α0}‖, 1)/min L"""
        p = self.params
        return max(_sup(p.v0 * np.exp(-p.alpha0)), 1.0) / float(np.min(p.L))


class LipschitzStateLaw(StateLaw):
    """
    Пользовательский закон с заявленной константой Липшица.

    :param func: Функция G(α, r)
    :param lipschitz: L_G
    """

    variant = "lipschitz"

    def __init__(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray], lipschitz: float):
        self.func = func
        self.lipschitz = float(lipschitz)

    def _rate(self, alpha, r):
        return np.asarray(self.func(alpha, r), dtype=float) * np.ones(np.broadcast(alpha, r).shape)

    def lipschitz_constant(self) -> float:
        return self.lipschitz


class ZeroStateLaw(LipschitzStateLaw):
    """G ≡ 0"""

    variant = "none"

    def __init__(self):
        super().__init__(lambda alpha, r: 0.0, 0.0)


def mu(law: FrictionLaw, r, alpha) -> np.ndarray:
    return law.mu(r, alpha)


def state_rate(law: StateLaw, alpha, r) -> np.ndarray:
    return law.rate(alpha, r)


def rsf_constants(law: FrictionLaw) -> RsfConstants:
    """(L1, L2, L3, κ1, κ2, κ3) закона трения"""
    return law.constants()


def state_constants(law: StateLaw) -> float:
    """L_G закона эволюции"""
    return law.lipschitz_constant()


# --- нормальный контакт --------------------------------------------------

@dataclass(frozen=True)
class ComplianceLaw:
    """
    Степенная податливость с обрезкой по износу:
    p(r) = c_p·(r⁺)ᵐ при r ≤ r*, p* = c_p·(r*)ᵐ при r > r*.
    """

    c_p: float
    exponent: int = 1
    r_star: float = 1.0

    def __post_init__(self):
        if not self.c_p >= 0:
            raise ContractError(f"c_p должен быть неотрицательным: {self.c_p}")
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise ContractError(f"Показатель m должен быть целым положительным: {self.exponent}")
        if not self.r_star > 0:
            raise ContractError(f"Порог r* должен быть положительным: {self.r_star}")

    @property
    def p_star(self) -> float:
        return self.c_p * self.r_star ** self.exponent

    @property
    def lipschitz(self) -> float:
        """L_p = c_p·m·(r*)^{m−1}"""
        return self.c_p * self.exponent * self.r_star ** (self.exponent - 1)

    def pressure(self, r) -> np.ndarray:
        r = _as_finite(r, "r")
        clipped = np.clip(r, 0.0, self.r_star)
        return self.c_p * clipped ** self.exponent


def compliance(law: ComplianceLaw, r) -> np.ndarray:
    return law.pressure(r)


class DampedResponseLaw:
    """
    Выпуклый суперпотенциал j_ν нормального демпфированного отклика.
    Поставляемые варианты: quadratic (½κr²) и absolute (κ|r|).

    Пользовательский наследник переопределяет value/dirderiv/prox и
    split(), если решатель шага должен с ним работать.
    """

    convex = True
    m_j = 0.0

    def __init__(self, kind: str = "quadratic", kappa: float = 0.0):
        if kind not in ("quadratic", "absolute"):
            raise ContractError(f"Неизвестный вид j_ν: {kind}")
        if not kappa >= 0:
            raise ContractError(f"κ должен быть неотрицательным: {kappa}")
        self.kind = kind
        self.kappa = float(kappa)

    def value(self, r) -> np.ndarray:
        r = _as_finite(r, "r")
        if self.kind == "quadratic":
            return 0.5 * self.kappa * r ** 2
        return self.kappa * np.abs(r)

    def dirderiv(self, r, s) -> np.ndarray:
        """Производная по направлению j_ν°(r; s)"""
        r = _as_finite(r, "r")
        s = _as_finite(s, "s")
        if self.kind == "quadratic":
            return self.kappa * r * s
        return self.kappa * np.where(r != 0, np.sign(r) * s, np.abs(s))

    def prox(self, r, t: float) -> np.ndarray:
        """argmin_x t·j_ν(x) + ½(x − r)²"""
        r = _as_finite(r, "r")
        if self.kind == "quadratic":
            return r / (1.0 + t * self.kappa)
        return np.sign(r) * np.maximum(np.abs(r) - t * self.kappa, 0.0)

    def split(self) -> Tuple[float, float]:
        """Разложение j_ν = ½·q·r² + c·|r|: (q, c)"""
        if self.kind == "quadratic":
            return self.kappa, 0.0
        return 0.0, self.kappa

    def growth_constants(self) -> Tuple[float, float]:
        """(c̄0, c̄1): |∂j_ν(r)| ≤ c̄0 + c̄1|r|"""
        if self.kind == "quadratic":
            return 0.0, self.kappa
        return self.kappa, 0.0


def damped_dirderiv(law: DampedResponseLaw, r, s) -> np.ndarray:
    return law.dirderiv(r, s)


# --- проверки ------------------------------------------------------------

@dataclass(frozen=True)
class ClaimReport:
    n_samples: int
    violations_single: int
    violations_pair: int
    worst_margin_single: float
    worst_margin_pair: float

    @property
    def passed(self) -> bool:
        return self.violations_single == 0 and self.violations_pair == 0


def arcsinh_claim_check(n_samples: int = 1_000_000, seed: int = 42, bound: float = 10.0,
                        slack: float = 1e-12, chunk: int = 200_000) -> ClaimReport:
    """
    Проверяет на случайной выборке из [−bound, bound]:
    |arcsinh(βξ)| ≤ |β| + |ξ| и
    |arcsinh(β1ξ1) − arcsinh(β2ξ2)| ≤ |β1||ξ1 − ξ2| + |ξ2||β1 − β2|.

    :param n_samples: Размер выборки
    :param seed: Зерно генератора
    :param bound: Полуширина интервала выборки
    :param slack: Допуск
    :param chunk: Размер порции
    :return: ClaimReport
    """
    if n_samples < 1:
        raise ContractError("n_samples должно быть ≥ 1")
    rng = np.random.default_rng(seed)
    worst_single = math.inf
    worst_pair = math.inf
    bad_single = 0
    bad_pair = 0
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        beta, xi, beta1, xi1, beta2, xi2 = rng.uniform(-bound, bound, size=(6, size))
        single = np.abs(beta) + np.abs(xi) - np.abs(np.arcsinh(beta * xi))
        pair = (np.abs(beta1) * np.abs(xi1 - xi2) + np.abs(xi2) * np.abs(beta1 - beta2)
                - np.abs(np.arcsinh(beta1 * xi1) - np.arcsinh(beta2 * xi2)))
        worst_single = min(worst_single, float(single.min()))
        worst_pair = min(worst_pair, float(pair.min()))
        bad_single += int(np.count_nonzero(single < -slack))
        bad_pair += int(np.count_nonzero(pair < -slack))
        done += size
    report = ClaimReport(n_samples, bad_single, bad_pair, worst_single, worst_pair)
    logger.info(f"Неравенства arcsinh: {n_samples} выборок, нарушений {bad_single}/{bad_pair}, "
                f"худшие запасы {worst_single:.3e}/{worst_pair:.3e}")
    return report


@dataclass(frozen=True)
class SignReport:
    dG_dalpha: Tuple[float, float]
    dmu_dr: Tuple[float, float]
    dmu_dalpha: Tuple[float, float]
    statuses: Dict[str, str]

    @property
    def passed(self) -> bool:
        return "violated" not in self.statuses.values()


def _central_difference(func, x, step):
    return (func(x + step) - func(x - step)) / (2.0 * step)


def _sign_status(values: np.ndarray, expected: int, neutral_tol: float = 0.0) -> str:
    if values.size == 0:
        return "neutral"
    if np.all(np.abs(values) <= neutral_tol):
        return "neutral"
    if expected > 0:
        return "positive" if np.all(values > 0) else "violated"
    return "negative" if np.all(values < 0) else "violated"


def qualitative_sign_check(friction: FrictionLaw, state: StateLaw, alpha_window: Tuple[float, float],
                           r_window: Tuple[float, float], n_points: int = 21) -> SignReport:
    """
    Центральные разности (шаг 1e-6·масштаб): ∂G/∂α < 0, ∂μ/∂r > 0 и
    ∂μ/∂α > 0 там, где скобка линеаризации положительна.

    :param friction: Закон трения
    :param state: Закон эволюции
    :param alpha_window: Интервал по α
    :param r_window: Интервал по r (строго положительный)
    :param n_points: Число точек на каждой оси
    :return: SignReport
    """
    if not alpha_window[0] <= alpha_window[1] or not 0 < r_window[0] <= r_window[1]:
        raise ContractError("Окна должны быть непустыми, окно по r - строго положительным")
    alphas = np.linspace(alpha_window[0], alpha_window[1], n_points)
    rates = np.geomspace(r_window[0], r_window[1], n_points)
    A, R = np.meshgrid(alphas, rates, indexing="ij")
    alpha_step = 1e-6 * np.maximum(1.0, np.abs(A))

    dG = _central_difference(lambda a: state.rate(a, R), A, alpha_step)
    dmu_dr = _central_difference(lambda r: friction.mu(r, A), R, 1e-6 * R)

    in_window = np.ones_like(A, dtype=bool)
    if isinstance(friction, FirstOrderFriction):
        in_window = friction.bracket(A - alpha_step) > 0
    dmu_da = _central_difference(lambda a: friction.mu(R, a), A, alpha_step)[in_window]

    statuses = {
        "dG_dalpha": _sign_status(dG, -1),
        "dmu_dr": _sign_status(dmu_dr, +1),
        "dmu_dalpha": _sign_status(dmu_da, +1),
    }
    report = SignReport(
        dG_dalpha=(float(dG.min()), float(dG.max())),
        dmu_dr=(float(dmu_dr.min()), float(dmu_dr.max())),
        dmu_dalpha=(float(dmu_da.min()), float(dmu_da.max())) if dmu_da.size else (0.0, 0.0),
        statuses=statuses,
    )
    if not report.passed:
        logger.warning(f"⚠️ Нарушены знаковые условия: {statuses}")
    return report


def approximation_order(exact: Callable[[np.ndarray], np.ndarray], approx: Callable[[np.ndarray], np.ndarray],
                        alpha0: float, deltas: Sequence[float]) -> Tuple[float, np.ndarray]:
    """
    Наклон лог-лог регрессии отклонения max|exact − approx| от |α − α0|.

    :param exact: Функция α → значения точного закона (по сетке r)
    :param approx: Функция α → значения приближения (по той же сетке)
    :param alpha0: Точка разложения
    :param deltas: Отклонения |α − α0|
    :return: (наклон, отклонения)
    """
    deltas = np.asarray(deltas, dtype=float)
    deviations = np.array([float(np.max(np.abs(exact(alpha0 + d) - approx(alpha0 + d)))) for d in deltas])
    slope = float(np.polyfit(np.log(deltas), np.log(deviations), 1)[0])
    return slope, deviations
