#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Общие фикстуры: сценарии пресетов и прогоны, которые дорого повторять.
"""

import numpy as np
import pytest

from src.cli.presets import load_preset
from src.cli.scenario import build_scenario
from src.core.discrete import DiscreteProblem
from src.core.scheme import run_scheme


def make_problem(n_dof: int = 3, n_steps: int = 4, trace_tau=None, trace_nu=None, weights=(1.0,),
                 visc_scale: float = 1.0, **kwargs) -> DiscreteProblem:
    """Маленькая задача с единичными массой и нормами"""
    eye = np.eye(n_dof)
    n_contact = len(weights)
    tau = np.zeros((n_contact, n_dof)) if trace_tau is None else np.asarray(trace_tau, dtype=float)
    nu = np.zeros((n_contact, n_dof)) if trace_nu is None else np.asarray(trace_nu, dtype=float)
    return DiscreteProblem(mass=eye, visc=visc_scale * eye, v_norm=eye, h_norm=eye, trace_tau=tau,
                           trace_nu=nu, contact_weights=np.asarray(weights, dtype=float),
                           load=np.zeros((n_steps + 1, n_dof)), **kwargs)


@pytest.fixture(scope="session")
def chain_scenario():
    return build_scenario(load_preset("chain-1d"))


@pytest.fixture(scope="session")
def chain_picard(chain_scenario):
    s = chain_scenario
    return run_scheme(s.prob, s.kernel, s.laws, s.config.scheme, s.init)


@pytest.fixture(scope="session")
def frictionless_scenario():
    return build_scenario(load_preset("frictionless", {"scheme.outer_tol": "1e-13"}))


@pytest.fixture(scope="session")
def table1_scenario():
    return build_scenario(load_preset("table1-compliance"))
