#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest

from conftest import make_problem
from src.core.discrete import TrajectoryState
from src.core.exceptions import ContractError, ShapeError
from src.core.history import (HistoryKernel, eval_R, eval_S_j, eval_S_phi, history_lipschitz_probe,
                              quadrature_weights)

DT = 0.1
N_STEPS = 5


def _setup(quadrature: str = "right-rectangle", offset: float = 0.0):
    prob = make_problem(n_dof=3, n_steps=N_STEPS, trace_nu=[[1.0, 0.0, 0.0]],
                        normal_offset=np.array([offset]))
    kernel = HistoryKernel.for_problem(
        prob, DT,
        elasticity=np.diag([1.0, 2.0, 3.0]),
        relaxation_operator=np.eye(3),
        relaxation_profile=np.exp(-DT * np.arange(N_STEPS + 1)),
        u0=np.array([1.0, 0.0, 0.0]),
        quadrature=quadrature,
    )
    return prob, kernel


def _trajectory(kernel: HistoryKernel, seed: int = 3) -> TrajectoryState:
    w = np.random.default_rng(seed).standard_normal((N_STEPS + 1, 3))
    return TrajectoryState.from_velocity(w, kernel.u0, np.zeros((N_STEPS + 1, 1)), DT, kernel.quadrature)


def test_quadrature_weights():
    np.testing.assert_allclose(quadrature_weights(3, "right-rectangle"), [0.0, 1.0, 1.0, 1.0])
    np.testing.assert_allclose(quadrature_weights(3, "trapezoid"), [0.5, 1.0, 1.0, 0.5])
    np.testing.assert_allclose(quadrature_weights(0, "trapezoid"), [0.0])
    with pytest.raises(ContractError):
        quadrature_weights(2, "simpson")


@pytest.mark.parametrize("quadrature", ["right-rectangle", "trapezoid"])
def test_step_evaluation_matches_full_history(quadrature):
    _, kernel = _setup(quadrature)
    traj = _trajectory(kernel)
    xi_all = kernel.eval_R_all(traj)
    eta_all = kernel.eval_S_phi_all(traj)
    for k in range(N_STEPS + 1):
        xi, eta, chi = kernel.evaluate_step(traj.w[: k + 1])
        np.testing.assert_allclose(xi, xi_all[k], rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(eta, eta_all[k], rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(chi, 0.0)


@pytest.mark.parametrize("quadrature", ["right-rectangle", "trapezoid"])
def test_single_step_evaluators_match_full_history(quadrature):
    _, kernel = _setup(quadrature, offset=0.5)
    traj = _trajectory(kernel, seed=5)
    xi_all = kernel.eval_R_all(traj)
    eta_all = kernel.eval_S_phi_all(traj)
    for k in range(N_STEPS + 1):
        np.testing.assert_allclose(eval_R(kernel, traj, k), xi_all[k], rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(eval_S_phi(kernel, traj, k), eta_all[k], rtol=1e-12, atol=1e-14)


def test_elastic_history_at_first_step():
    _, kernel = _setup()
    w = np.zeros((N_STEPS + 1, 3))
    w[1] = [1.0, 1.0, 1.0]
    traj = TrajectoryState.from_velocity(w, kernel.u0, np.zeros((N_STEPS + 1, 1)), DT)
    # u_1 = u0 + dt·w_1, ξ_1 = E·u_1 + dt·c(0)·w_1
    expected = np.diag([1.0, 2.0, 3.0]) @ np.array([1.1, 0.1, 0.1]) + DT * np.ones(3)
    np.testing.assert_allclose(eval_R(kernel, traj, 1), expected)


def test_normal_displacement_includes_offset():
    _, kernel = _setup(offset=0.25)
    traj = TrajectoryState.constant(np.array([2.0, 0.0, 0.0]), kernel.u0, np.zeros(1), DT, N_STEPS)
    eta = eval_S_phi(kernel, traj, 3)
    assert eta == pytest.approx([1.0 + 3 * DT * 2.0 + 0.25])
    np.testing.assert_allclose(eval_S_j(kernel, traj, 3), [0.0])


def test_custom_s_j_slot():
    prob, _ = _setup()
    kernel = HistoryKernel.for_problem(prob, DT, elasticity=np.eye(3),
                                       s_j=lambda traj, k: np.array([float(k)]))
    traj = TrajectoryState.constant(np.zeros(3), np.zeros(3), np.zeros(1), DT, N_STEPS)
    np.testing.assert_allclose(eval_S_j(kernel, traj, 4), [4.0])
    _, _, chi = kernel.evaluate_step(traj.w[:3], traj.alpha[:3])
    np.testing.assert_allclose(chi, [2.0])


def test_index_outside_trajectory():
    _, kernel = _setup()
    traj = _trajectory(kernel)
    with pytest.raises(IndexError):
        eval_R(kernel, traj, N_STEPS + 1)
    with pytest.raises(IndexError):
        eval_S_phi(kernel, traj, -1)


def test_trajectory_longer_than_kernel():
    _, kernel = _setup()
    w = np.zeros((N_STEPS + 3, 3))
    traj = TrajectoryState.from_velocity(w, kernel.u0, np.zeros((N_STEPS + 3, 1)), DT)
    with pytest.raises(ShapeError):
        kernel.eval_R_all(traj)


@pytest.mark.parametrize("quadrature", ["right-rectangle", "trapezoid"])
def test_lipschitz_probe_within_analytic_bound(quadrature):
    prob, kernel = _setup(quadrature)
    probe = history_lipschitz_probe(kernel, prob, n_trials=50, n_steps=N_STEPS, seed=7)
    assert probe.n_ratios > 0
    assert probe.c_R > 0
    assert probe.holds
