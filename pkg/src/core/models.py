#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Модели конфигурации запуска (pydantic). Каждая секция файла
конфигурации - отдельная модель; неизвестные ключи запрещены.
"""

import math
import os
from typing import Literal, Optional, Tuple

from pydantic import (BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt,
                      field_validator, model_validator)

EDGES_2D = ("left", "right", "bottom", "top")
EDGES_1D = ("left", "right")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, allow_inf_nan=False)


def _split_list(value):
    if isinstance(value, str):
        return tuple(item.strip() for item in value.split(",") if item.strip())
    return value


class MeshSpec(_Section):
    """
    Геометрия: цепочка (dimension = 1) или прямоугольник (dimension = 2),
    разметка ребер на Γ_D (dirichlet) и Γ_C (contact), остальное - Γ_N.
    """

    dimension: Literal[1, 2] = 2
    extent_x: PositiveFloat = 1.0                 # м
    extent_y: PositiveFloat = 1.0                 # м
    subdivisions_x: PositiveInt = 4
    subdivisions_y: PositiveInt = 2
    dirichlet: Tuple[str, ...] = ("left",)
    contact: Tuple[str, ...] = ("bottom",)
    consistent_mass: bool = False
    contact_offset: float = 0.0                   # начальное внедрение контактных узлов, м

    @field_validator("dimension", mode="before")
    @classmethod
    def parse_dimension(cls, value):
        if isinstance(value, str) and value.strip().isdigit():
            return int(value)
        return value

    @field_validator("dirichlet", "contact", mode="before")
    @classmethod
    def split_edges(cls, value):
        return _split_list(value)

    @model_validator(mode="after")
    def check_edges(self):
        allowed = EDGES_1D if self.dimension == 1 else EDGES_2D
        for edge in self.dirichlet + self.contact:
            if edge not in allowed:
                raise ValueError(f"неизвестное ребро '{edge}', допустимы {allowed}")
        if set(self.dirichlet) & set(self.contact):
            raise ValueError("ребро не может одновременно принадлежать Γ_D и Γ_C")
        return self

    def neumann_edges(self) -> Tuple[str, ...]:
        allowed = EDGES_1D if self.dimension == 1 else EDGES_2D
        return tuple(edge for edge in allowed if edge not in self.dirichlet + self.contact)


class MaterialSection(_Section):
    """Изотропный материал Кельвина-Фойгта с экспоненциальной релаксацией"""

    density: PositiveFloat = 1.0                  # кг/м³
    viscosity: float = 1.0                        # Па·с, a = η·I на 𝕊^d
    elasticity_lambda: float = 0.0                # Па
    elasticity_mu: float = 0.5                    # Па
    relaxation_amplitude: float = 0.0             # Па/с
    relaxation_time: PositiveFloat = 1.0          # с


class LoadSection(_Section):
    """Объемная сила и поверхностная нагрузка с общим временным профилем"""

    body_force_x: float = 0.0
    body_force_y: float = 0.0
    traction_x: float = 0.0
    traction_y: float = 0.0
    profile: Literal["constant", "ramp", "sine"] = "constant"
    period: PositiveFloat = 1.0

    def amplitude(self, t: float) -> float:
        if self.profile == "constant":
            return 1.0
        if self.profile == "ramp":
            return min(t / self.period, 1.0)
        return math.sin(2.0 * math.pi * t / self.period)


class ContactSection(_Section):
    """
    Модель контакта и законы трения/эволюции состояния.
    Параметры RSF по умолчанию - опорный набор (RsfParams.reference_set).
    """

    model: Literal["compliance", "damped", "none"] = "compliance"
    friction: Literal["regularized", "truncated", "first-order", "constant", "none"] = "first-order"
    friction_value: float = Field(default=0.0, ge=0.0)
    coefficient_cap: Optional[PositiveFloat] = None
    state: Literal["aging", "slip", "first-order-aging", "none"] = "first-order-aging"
    a: PositiveFloat = 0.011
    b: float = 0.014
    mu0: float = 0.7
    v0: PositiveFloat = 1e-9                      # м/с
    L: PositiveFloat = 5e-5                       # м
    alpha0: Optional[float] = None                # по умолчанию ln(v0/L)
    c_p: float = Field(default=1.0, ge=0.0)       # Па/мᵐ
    exponent: PositiveInt = 1
    r_star: PositiveFloat = 1.0                   # м
    damping: Literal["quadratic", "absolute"] = "quadratic"
    kappa: float = Field(default=0.0, ge=0.0)

    def initial_state(self) -> float:
        return math.log(self.v0 / self.L) if self.alpha0 is None else self.alpha0


class SchemeConfig(_Section):
    """
    Параметры внешней итерации Пикара и интегрирования по времени.
    """

    T: PositiveFloat = 0.1                        # с
    dt: PositiveFloat = 1e-3                      # с
    outer_tol: PositiveFloat = 1e-10
    max_outer: PositiveInt = 50
    alpha_integrator: Literal["explicit-midpoint", "picard-lambda"] = "explicit-midpoint"
    mode: Literal["picard", "incremental"] = "picard"
    seed: int = 42
    quadrature: Literal["right-rectangle", "trapezoid"] = "right-rectangle"
    kkt_tol: PositiveFloat = 1e-10                 # абсолютный, в двойственной V-норме
    kkt_relative: bool = False
    max_inner: PositiveInt = 200
    vi_probes: int = Field(default=4, ge=0)
    nonlinear_visc: bool = False

    @field_validator("alpha_integrator", mode="before")
    @classmethod
    def alias_lambda(cls, value):
        return "picard-lambda" if value == "picard-Λ" else value

    @model_validator(mode="after")
    def check_grid(self):
        ratio = self.T / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio) or round(ratio) < 1:
            raise ValueError(f"dt: отношение T/dt = {ratio!r} не целое")
        return self

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))


class InitialSection(_Section):
    """Однородные начальные скорость и перемещение на свободных степенях свободы"""

    w0_x: float = 0.0
    w0_y: float = 0.0
    u0_x: float = 0.0
    u0_y: float = 0.0


class OutputSection(_Section):
    """Каталог вывода (по умолчанию RSC_OUTPUT_DIR или results) и состав файлов"""

    directory: str = Field(default_factory=lambda: os.getenv("RSC_OUTPUT_DIR", "results"))
    formats: Tuple[Literal["trajectory", "report"], ...] = ("trajectory", "report")

    @field_validator("formats", mode="before")
    @classmethod
    def split_formats(cls, value):
        return _split_list(value)


class RunConfig(_Section):
    """Полная конфигурация запуска"""

    mesh: MeshSpec = MeshSpec()
    material: MaterialSection = MaterialSection()
    loads: LoadSection = LoadSection()
    contact: ContactSection = ContactSection()
    scheme: SchemeConfig = SchemeConfig()
    initial: InitialSection = InitialSection()
    output: OutputSection = Field(default_factory=OutputSection)
