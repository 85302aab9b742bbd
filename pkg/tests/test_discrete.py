#!/usr/bin/env python
# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import make_problem
from src.core.discrete import (ConstantsRecord, TrajectoryState, accumulate_displacement, check_spd,
                               coercivity_constant, contact_l2_norm, contact_lp_norm, cy_norm,
                               dual_v_norm_of, estimate_lp_operator_norm, estimate_operator_norm, l2v_norm,
                               trace_norms, v_norm_of)
from src.core.exceptions import ContractError, ShapeError


def test_check_spd_rejects_asymmetric_and_indefinite():
    with pytest.raises(ContractError):
        check_spd(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ContractError):
        check_spd(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(ShapeError):
        check_spd(np.ones((2, 3)))


def test_problem_validates_shapes():
    with pytest.raises(ShapeError):
        make_problem(trace_tau=np.zeros((1, 2)))
    with pytest.raises(ContractError):
        make_problem(weights=(-1.0,))


def test_trace_outside_contact_dofs_rejected():
    with pytest.raises(ContractError):
        make_problem(trace_tau=[[1.0, 0.0, 0.0]], contact_dofs=np.array([False, True, True]))


def test_problem_is_immutable():
    prob = make_problem()
    with pytest.raises(ValueError):
        prob.mass[0, 0] = 2.0


def test_with_horizon_trims_load():
    prob = make_problem(n_steps=6)
    assert prob.with_horizon(3).n_steps == 3
    with pytest.raises(ShapeError):
        prob.with_horizon(7)


def test_right_rectangle_displacement():
    w = np.ones((4, 1))
    u = accumulate_displacement(w, np.zeros(1), 0.1)
    np.testing.assert_allclose(u[:, 0], [0.0, 0.1, 0.2, 0.3])

    # w_0 не входит: на [t_{j-1}, t_j] берется правое значение w_j
    w = np.array([[5.0], [1.0], [2.0], [3.0]])
    u = accumulate_displacement(w, np.ones(1), 0.1)
    np.testing.assert_allclose(u[:, 0], [1.0, 1.1, 1.3, 1.6])


def test_trapezoid_displacement():
    w = np.array([[0.0], [1.0], [2.0]])
    u = accumulate_displacement(w, np.zeros(1), 1.0, "trapezoid")
    np.testing.assert_allclose(u[:, 0], [0.0, 0.5, 2.0])


def test_l2v_norm_skips_initial_sample():
    prob = make_problem(n_dof=1)
    w_diff = np.array([[5.0], [1.0], [1.0]])
    assert l2v_norm(prob, w_diff, 0.5) == pytest.approx(1.0)


def test_cy_norm_takes_time_maximum():
    prob = make_problem(weights=(1.0, 1.0))
    assert cy_norm(prob, np.array([[0.0, 0.0], [1.0, 2.0]])) == pytest.approx(math.sqrt(5.0))


def test_contact_norms():
    assert contact_lp_norm([2.0], [1.0]) == pytest.approx(2.0)
    assert contact_l2_norm([3.0, 4.0], [1.0, 1.0]) == pytest.approx(5.0)
    with pytest.raises(ShapeError):
        contact_lp_norm([1.0, 2.0], [1.0])


def test_norms_of_vectors():
    prob = make_problem(trace_tau=[[0.0, 0.0, 1.0]], trace_nu=[[1.0, 0.0, 0.0]])
    x = np.array([3.0, 0.0, 4.0])
    assert v_norm_of(prob, x) == pytest.approx(5.0)
    assert dual_v_norm_of(prob, x) == pytest.approx(5.0)
    assert trace_norms(prob, x) == pytest.approx((4.0, 3.0))


def test_power_iteration_finds_largest_singular_value():
    value = estimate_operator_norm(np.diag([1.0, 2.0, 3.0]), np.eye(3), np.eye(3))
    assert value == pytest.approx(3.0, rel=1e-8)


def test_power_iteration_respects_source_norm():
    value = estimate_operator_norm(np.eye(2), np.diag([4.0, 1.0]), np.eye(2))
    assert value == pytest.approx(1.0, rel=1e-8)


def test_lp_norm_of_point_trace():
    value = estimate_lp_operator_norm([np.array([[1.0, 0.0, 0.0]])], np.array([1.0]), np.eye(3))
    assert value == pytest.approx(1.0, rel=1e-6)


def test_zero_map_has_zero_norm():
    assert estimate_lp_operator_norm([np.zeros((1, 3))], np.array([1.0]), np.eye(3)) == 0.0
    assert estimate_operator_norm(np.zeros((2, 2)), np.eye(2), np.eye(2)) == 0.0


def test_coercivity_constant():
    assert coercivity_constant(2.0 * np.eye(3), np.eye(3)) == pytest.approx(2.0)
    assert coercivity_constant(np.diag([1.0, -1.0]), np.eye(2)) < 0


def test_constants_record_rejects_negative_values():
    with pytest.raises(ValidationError):
        ConstantsRecord(m_A=-1.0)
    record = ConstantsRecord(m_A=1.0, beta=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0))
    assert record.beta_i(4) == 4.0


def test_constant_trajectory():
    traj = TrajectoryState.constant(np.ones(2), np.zeros(2), np.zeros(1), 0.5, 4)
    assert traj.n_steps == 4
    np.testing.assert_allclose(traj.times, [0.0, 0.5, 1.0, 1.5, 2.0])
    np.testing.assert_allclose(traj.u[-1], [2.0, 2.0])
