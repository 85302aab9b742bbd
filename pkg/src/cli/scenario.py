#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Сборка сценария из RunConfig: материал, нагрузки, дискретная задача,
ядро памяти, законы контакта и начальные данные.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.assembly import (LoadSpec, MaterialSpec, assemble, elasticity_operator, relaxation_operator,
                               relaxation_profile)
from src.core.discrete import DiscreteProblem
from src.core.friction import (AgingLaw, ComplianceLaw, ConstantFriction, DampedResponseLaw, FirstOrderAgingLaw,
                               FirstOrderFriction, FrictionLaw, RegularizedFriction, RsfParams, SlipLaw,
                               StateLaw, TruncatedCoefficient, TruncatedFriction, ZeroStateLaw)
from src.core.history import HistoryKernel
from src.core.models import ContactSection, LoadSection, RunConfig
from src.core.scheme import ContactLaws, InitialState
from src.core.vi_solver import DampedResponse, NormalCompliance
from src.utils.logger import logger


@dataclass(frozen=True)
class Scenario:
    config: RunConfig
    material: MaterialSpec
    prob: DiscreteProblem
    kernel: HistoryKernel
    laws: ContactLaws
    init: InitialState
    params: RsfParams


def rsf_params(contact: ContactSection) -> RsfParams:
    return RsfParams(a=contact.a, b=contact.b, mu0=contact.mu0, v0=contact.v0, L=contact.L,
                     alpha0=contact.initial_state())


def friction_law(contact: ContactSection, params: Optional[RsfParams] = None) -> FrictionLaw:
    """
    Закон трения секции [contact]; coefficient_cap оборачивает его
    в TruncatedCoefficient.
    """
    params = rsf_params(contact) if params is None else params
    if contact.friction == "regularized":
        law = RegularizedFriction(params)
    elif contact.friction == "truncated":
        law = TruncatedFriction(params)
    elif contact.friction == "first-order":
        law = FirstOrderFriction(params)
    elif contact.friction == "constant":
        law = ConstantFriction(contact.friction_value)
    else:
        law = ConstantFriction(0.0)
    if contact.coefficient_cap is not None:
        law = TruncatedCoefficient(law, contact.coefficient_cap)
    return law


def state_law(contact: ContactSection, params: Optional[RsfParams] = None) -> StateLaw:
    params = rsf_params(contact) if params is None else params
    if contact.state == "aging":
        return AgingLaw(params)
    if contact.state == "slip":
        return SlipLaw(params)
    if contact.state == "first-order-aging":
        return FirstOrderAgingLaw(params)
    return ZeroStateLaw()


def contact_laws(contact: ContactSection, params: Optional[RsfParams] = None) -> ContactLaws:
    """
    Модель контакта: compliance - p(η) и μ·p; damped - j_ν и μ;
    none - нулевая податливость (контакт без трения).
    """
    params = rsf_params(contact) if params is None else params
    friction = friction_law(contact, params)
    if contact.model == "compliance":
        model = NormalCompliance(ComplianceLaw(contact.c_p, contact.exponent, contact.r_star), friction)
    elif contact.model == "damped":
        model = DampedResponse(DampedResponseLaw(contact.damping, contact.kappa), friction)
    else:
        model = NormalCompliance(ComplianceLaw(0.0), friction)
    return ContactLaws(model, state_law(contact, params))


def _sampler(section: LoadSection, x_value: float, y_value: float, dimension: int):
    if x_value == 0.0 and y_value == 0.0:
        return None
    vector = np.array([x_value, y_value])[:dimension]
    return lambda x, t: section.amplitude(t) * vector


def load_spec(config: RunConfig) -> LoadSpec:
    loads, d = config.loads, config.mesh.dimension
    return LoadSpec(
        dt=config.scheme.dt,
        n_steps=config.scheme.n_steps,
        body_force=_sampler(loads, loads.body_force_x, loads.body_force_y, d),
        traction=_sampler(loads, loads.traction_x, loads.traction_y, d),
    )


def _uniform(n_dof: int, dimension: int, x_value: float, y_value: float) -> np.ndarray:
    # свободные степени свободы идут узлами: (x) в 1D, (x, y) в 2D
    pattern = np.array([x_value, y_value])[:dimension]
    return np.tile(pattern, n_dof // dimension)


def build_scenario(config: RunConfig) -> Scenario:
    """
    Собирает все объекты расчета по конфигурации.

    :param config: Конфигурация
    :return: Scenario
    """
    mesh, scheme = config.mesh, config.scheme
    material = MaterialSpec.isotropic(mesh.dimension, **config.material.model_dump())
    prob = assemble(mesh, material, load_spec(config))

    initial = config.initial
    init = InitialState(
        w0=_uniform(prob.n_dof, mesh.dimension, initial.w0_x, initial.w0_y),
        u0=_uniform(prob.n_dof, mesh.dimension, initial.u0_x, initial.u0_y),
        alpha0=np.full(prob.n_contact, config.contact.initial_state()),
    )
    kernel = HistoryKernel.for_problem(
        prob,
        scheme.dt,
        elasticity=elasticity_operator(mesh, material),
        relaxation_operator=relaxation_operator(mesh, material),
        relaxation_profile=relaxation_profile(material, scheme.dt, scheme.n_steps),
        u0=init.u0,
        quadrature=scheme.quadrature,
    )
    params = rsf_params(config.contact)
    laws = contact_laws(config.contact, params)
    logger.info(f"Сценарий: контакт '{config.contact.model}', трение '{laws.friction.variant}', "
                f"состояние '{laws.state.variant}', режим '{scheme.mode}'")
    return Scenario(config, material, prob, kernel, laws, init, params)
