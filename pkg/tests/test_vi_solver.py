#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Задача с одной степенью свободы: Q = mass/dt + visc = 2, так что
минимизатор w² − ℓ·w + g·|w| известен в замкнутой форме.
"""

import math

import numpy as np
import pytest

from conftest import make_problem
from src.core.exceptions import ContractError, SolverError
from src.core.friction import ComplianceLaw, ConstantFriction, DampedResponseLaw
from src.core.vi_solver import (DampedResponse, FrozenStepData, NormalCompliance, SolverOptions,
                                build_step_functional, solve_step, verify_vi)


def _data(load, n_contact: int = 1, eta=0.0) -> FrozenStepData:
    load = np.atleast_1d(np.asarray(load, dtype=float))
    zeros = np.zeros(n_contact)
    return FrozenStepData(alpha=zeros, xi=np.zeros_like(load), eta=zeros + eta, g_tau=zeros, chi=zeros, load=load)


def _point_problem(**kwargs):
    return make_problem(n_dof=1, n_steps=1, trace_tau=[[1.0]], **kwargs)


def _damped(friction: float, kappa: float = 0.0) -> DampedResponse:
    return DampedResponse(DampedResponseLaw("quadratic", kappa), ConstantFriction(friction))


def test_slip_regime():
    prob = _point_problem()
    solution = solve_step(prob, _data(3.0), np.zeros(1), 1.0, _damped(1.0))
    assert solution.w_new == pytest.approx([1.0])
    assert solution.regimes == ("slip",)
    assert solution.kkt_residual <= 1e-10


def test_stick_regime():
    prob = _point_problem()
    solution = solve_step(prob, _data(0.5), np.zeros(1), 1.0, _damped(1.0))
    assert solution.w_new == pytest.approx([0.0], abs=1e-14)
    assert solution.regimes == ("stick",)


def test_frictionless_node_is_open():
    prob = _point_problem()
    solution = solve_step(prob, _data(3.0), np.zeros(1), 1.0, _damped(0.0))
    assert solution.w_new == pytest.approx([1.5])
    assert solution.regimes == ("open",)


def test_negative_slip_direction():
    prob = _point_problem()
    solution = solve_step(prob, _data(-3.0), np.zeros(1), 1.0, _damped(1.0), w_start=np.array([5.0]))
    assert solution.w_new == pytest.approx([-1.0])
    assert solution.regimes == ("slip",)


def test_solution_satisfies_inequality():
    prob = _point_problem()
    data = _data(3.0)
    model = _damped(1.0)
    solution = solve_step(prob, data, np.zeros(1), 1.0, model)
    assert verify_vi(prob, data, solution.w_new, np.zeros(1), 1.0, model, n_probes=16) >= -1e-12


def test_non_solution_violates_inequality():
    prob = _point_problem()
    data = _data(3.0)
    model = _damped(1.0)
    assert verify_vi(prob, data, np.array([0.2]), np.zeros(1), 1.0, model) < 0


def test_normal_compliance_with_friction():
    prob = make_problem(n_dof=2, n_steps=1, trace_tau=[[1.0, 0.0]], trace_nu=[[0.0, 1.0]])
    model = NormalCompliance(ComplianceLaw(c_p=1.0), ConstantFriction(1.0))
    data = _data([3.0, 0.0], eta=0.5)
    solution = solve_step(prob, data, np.zeros(2), 1.0, model)
    # граница трения μ·p(η) = 0.5, нормальная сила −p(η) = −0.5
    np.testing.assert_allclose(solution.w_new, [1.25, -0.25], atol=1e-12)
    assert verify_vi(prob, data, solution.w_new, np.zeros(2), 1.0, model) >= -1e-12


def test_quadratic_damping_enters_matrix():
    prob = make_problem(n_dof=2, n_steps=1, trace_tau=[[1.0, 0.0]], trace_nu=[[0.0, 1.0]])
    functional = build_step_functional(prob, _data([0.0, 1.0]), np.zeros(2), 1.0, _damped(0.0, kappa=2.0))
    np.testing.assert_allclose(functional.matrix, np.diag([2.0, 4.0]))
    solution = solve_step(prob, _data([0.0, 1.0]), np.zeros(2), 1.0, _damped(0.0, kappa=2.0))
    np.testing.assert_allclose(solution.w_new, [0.0, 0.25], atol=1e-12)


def test_absolute_damping_adds_rows():
    prob = make_problem(n_dof=2, n_steps=1, trace_tau=[[1.0, 0.0]], trace_nu=[[0.0, 1.0]])
    model = DampedResponse(DampedResponseLaw("absolute", 1.0), ConstantFriction(0.0))
    functional = build_step_functional(prob, _data([0.0, 3.0]), np.zeros(2), 1.0, model)
    assert functional.rows.shape == (2, 2)
    solution = solve_step(prob, _data([0.0, 3.0]), np.zeros(2), 1.0, model)
    np.testing.assert_allclose(solution.w_new, [0.0, 1.0], atol=1e-12)


def test_nonlinear_viscosity():
    prob = _point_problem(visc_map=lambda w: w + 0.2 * np.tanh(w))
    options = SolverOptions(nonlinear_visc=True)
    solution = solve_step(prob, _data(3.0), np.zeros(1), 1.0, _damped(0.0), opts=options)
    w = float(solution.w_new[0])
    assert 2.0 * w + 0.2 * math.tanh(w) == pytest.approx(3.0, abs=1e-9)


def test_nonlinear_viscosity_requires_flag():
    prob = _point_problem(visc_map=lambda w: w + 0.2 * np.tanh(w))
    with pytest.raises(ContractError):
        solve_step(prob, _data(3.0), np.zeros(1), 1.0, _damped(0.0))


def test_invalid_step_data():
    with pytest.raises(ContractError):
        FrozenStepData(alpha=[0.0], xi=[0.0], eta=[0.0], g_tau=[-1.0], chi=[0.0], load=[0.0])
    with pytest.raises(ContractError):
        FrozenStepData(alpha=[np.nan], xi=[0.0], eta=[0.0], g_tau=[0.0], chi=[0.0], load=[0.0])
    with pytest.raises(ContractError):
        solve_step(_point_problem(), _data(1.0), np.zeros(1), 0.0, _damped(1.0))


def test_large_load_meets_absolute_tolerance():
    prob = make_problem(n_dof=2, n_steps=1, trace_tau=[[1.0, 0.0]], trace_nu=[[0.0, 1.0]])
    model = NormalCompliance(ComplianceLaw(c_p=1.0), ConstantFriction(1.0))
    data = _data([3000.0, 0.0], eta=0.5)
    solution = solve_step(prob, data, np.zeros(2), 1.0, model)
    np.testing.assert_allclose(solution.w_new, [1499.75, -0.25], atol=1e-9)
    assert solution.kkt_residual <= 1e-10


def test_kkt_tolerance_is_absolute_by_default(monkeypatch):
    prob = _point_problem()
    data = _data(1e4)
    monkeypatch.setattr("src.core.vi_solver._kkt_residual", lambda *args: 1e-9)
    # ‖b‖ = 1e4: относительный допуск принял бы 1e-9, абсолютный 1e-10 - нет
    with pytest.raises(SolverError):
        solve_step(prob, data, np.zeros(1), 1.0, _damped(1.0))
    solution = solve_step(prob, data, np.zeros(1), 1.0, _damped(1.0), opts=SolverOptions(relative_kkt=True))
    assert solution.kkt_residual == 1e-9
