#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy as np
import pytest
from pydantic import ValidationError

from src.core.assembly import (FemSpace, LoadSpec, MaterialSpec, assemble, elasticity_operator,
                               kelvin_voigt_constants, relaxation_profile)
from src.core.exceptions import ConfigurationError
from src.core.models import MeshSpec


def _chain(n_el: int = 4) -> MeshSpec:
    return MeshSpec(dimension=1, extent_x=1.0, subdivisions_x=n_el, dirichlet=("left",), contact=("right",))


def _unit_load(dt: float = 0.1, n_steps: int = 2) -> LoadSpec:
    return LoadSpec(dt=dt, n_steps=n_steps, body_force=lambda x, t: np.ones(1))


def test_chain_operators():
    material = MaterialSpec.isotropic(1, density=1.0, viscosity=2.0, elasticity_lambda=0.0, elasticity_mu=0.5)
    prob = assemble(_chain(), material, _unit_load())

    assert prob.n_dof == 4
    assert prob.n_contact == 1
    np.testing.assert_allclose(np.diag(prob.mass), [0.25, 0.25, 0.25, 0.125])
    np.testing.assert_allclose(prob.visc, 2.0 * prob.v_norm)
    np.testing.assert_allclose(prob.trace_tau, [[0.0, 0.0, 0.0, 1.0]])
    np.testing.assert_allclose(prob.trace_nu, 0.0)
    assert prob.contact_measure == pytest.approx(1.0)


def test_chain_load_excludes_dirichlet_share():
    material = MaterialSpec.isotropic(1, density=1.0, viscosity=1.0, elasticity_lambda=0.0, elasticity_mu=0.5)
    prob = assemble(_chain(), material, _unit_load())
    assert prob.load.shape == (3, 4)
    assert prob.load[0].sum() == pytest.approx(0.875)


def test_chain_stiffness_matches_finite_differences():
    material = MaterialSpec.isotropic(1, density=1.0, viscosity=1.0, elasticity_lambda=0.0, elasticity_mu=0.5)
    stiffness = elasticity_operator(_chain(), material)
    expected = 4.0 * (2.0 * np.eye(4) - np.eye(4, k=1) - np.eye(4, k=-1))
    expected[3, 3] = 4.0
    np.testing.assert_allclose(stiffness, expected)


def test_rectangle_contact_and_dofs():
    mesh = MeshSpec(dimension=2, extent_x=1.0, extent_y=0.5, subdivisions_x=4, subdivisions_y=2,
                    dirichlet=("left",), contact=("bottom",), contact_offset=1e-3)
    material = MaterialSpec.isotropic(2, density=1.0, viscosity=1.0, elasticity_lambda=0.5, elasticity_mu=0.5)
    prob = assemble(mesh, material, LoadSpec(dt=0.1, n_steps=1))

    assert prob.n_dof == 24
    assert prob.n_contact == 5
    assert prob.contact_measure == pytest.approx(1.0)
    np.testing.assert_allclose(prob.normal_offset, 1e-3)
    np.testing.assert_allclose(prob.load, 0.0)
    # у левого контактного узла все степени свободы закреплены
    assert not np.any(prob.trace_nu[0])
    assert np.count_nonzero(prob.trace_nu) == 4


def test_rectangle_lumped_mass_is_diagonal():
    mesh = MeshSpec(dimension=2, subdivisions_x=2, subdivisions_y=2, dirichlet=("left",), contact=("bottom",))
    space = FemSpace(mesh)
    # lumped масса на свободных узлах: 6 узлов × 2 компоненты
    assert space.mass(2.0).shape == (12, 12)
    assert np.allclose(space.mass(1.0), np.diag(np.diag(space.mass(1.0))))


def test_kelvin_voigt_constants():
    material = MaterialSpec.isotropic(2, density=1.0, viscosity=3.0, elasticity_lambda=1.0, elasticity_mu=0.5)
    constants = kelvin_voigt_constants(material)
    assert constants.m_A == pytest.approx(3.0)
    assert constants.L_A == pytest.approx(3.0)
    assert constants.L_B == pytest.approx(3.0)


def test_non_elliptic_viscosity_rejected():
    material = MaterialSpec.isotropic(1, density=1.0, viscosity=0.0, elasticity_lambda=0.0, elasticity_mu=0.5)
    with pytest.raises(ConfigurationError):
        assemble(_chain(), material, _unit_load())


def test_dimension_mismatch_rejected():
    material = MaterialSpec.isotropic(2, density=1.0, viscosity=1.0, elasticity_lambda=0.0, elasticity_mu=0.5)
    with pytest.raises(ConfigurationError):
        assemble(_chain(), material, _unit_load())


def test_asymmetric_tensor_rejected():
    with pytest.raises(ConfigurationError):
        MaterialSpec(dimension=1, density=1.0, viscosity=np.eye(3), elasticity=np.eye(1))
    with pytest.raises(ConfigurationError):
        MaterialSpec(dimension=2, density=1.0, viscosity=np.triu(np.ones((3, 3))), elasticity=np.eye(3))


def test_relaxation_profile():
    material = MaterialSpec.isotropic(1, density=1.0, viscosity=1.0, elasticity_lambda=0.0, elasticity_mu=0.5,
                                      relaxation_amplitude=2.0, relaxation_time=0.5)
    profile = relaxation_profile(material, 0.5, 2)
    np.testing.assert_allclose(profile, [2.0, 2.0 * np.exp(-1.0), 2.0 * np.exp(-2.0)])


def test_mesh_validation():
    with pytest.raises(ValidationError):
        MeshSpec(dimension=1, contact=("bottom",))
    with pytest.raises(ValidationError):
        MeshSpec(dirichlet=("left",), contact=("left",))
    assert MeshSpec(dimension="1", contact="right").contact == ("right",)
    assert MeshSpec(dirichlet="left, top").neumann_edges() == ("right",)
