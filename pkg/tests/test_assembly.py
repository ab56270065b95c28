"""
Unit tests for the DOF map and the global sparse assembly.
"""

import numpy as np
import pytest

from hho import OperatorOptions
from mesh import build_mesh, compute_geometry, generate_cartesian_mesh
from scenarios.fields import cubic_vortex
from solver.assembly import assemble_global, assemble_matrices, build_discrete_operators
from solver.dofmap import build_dof_map
from solver.initial_condition import interpolate_field
from utils.errors import AssemblyError


def test_single_square_dimensions():
    dofmap = build_dof_map(generate_cartesian_mesh(1, 1), 0)
    assert dofmap.n_cell_dofs == 3
    assert dofmap.n_face_dofs == 4


@pytest.mark.parametrize("k, cell, face", [(0, 12, 12), (1, 24, 24)])
def test_square_2x2_dimensions(square_mesh, k, cell, face):
    dofmap = build_dof_map(square_mesh, k)
    assert dofmap.n_cell_dofs == cell
    assert dofmap.n_face_dofs == face
    assert dofmap.n_dofs == cell + face


def test_interfaces_are_shared(square_mesh):
    dofmap = build_dof_map(square_mesh, 1)
    multiplicity = dofmap.face_multiplicity()
    assert sorted(np.flatnonzero(multiplicity == 2).tolist()) == sorted(square_mesh.interior_faces.tolist())
    assert np.all(multiplicity[square_mesh.boundary_faces] == 1)
    idx = dofmap.element_dofs(3)
    np.testing.assert_array_equal(idx[:6], dofmap.cell_dofs(3))
    f = square_mesh.element_faces[3][0]
    np.testing.assert_array_equal(idx[6:8], dofmap.face_dofs(f))


def test_negative_degree(square_mesh):
    with pytest.raises(ValueError):
        build_dof_map(square_mesh, -1)


def test_scatter_add_and_gather(square_mesh):
    dofmap = build_dof_map(square_mesh, 0)
    total = dofmap.scatter_add([np.ones(3 + 4)] * 4)
    np.testing.assert_array_equal(total[: dofmap.n_cell_dofs], 1.0)
    np.testing.assert_array_equal(total[dofmap.n_cell_dofs:], dofmap.face_multiplicity())
    np.testing.assert_array_equal(dofmap.gather(total, 0)[:3], 1.0)


def test_constants_in_global_kernel(operators_k0):
    one = interpolate_field(lambda x: np.ones(len(x)), operators_k0)
    np.testing.assert_allclose(operators_k0.diffusion @ one, 0.0, atol=1e-13)
    assert operators_k0.mass_vector @ one == pytest.approx(1.0)


def test_single_element_global_equals_local():
    geometry = compute_geometry(build_mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2, 3)]))
    ops = build_discrete_operators(geometry, 1)
    np.testing.assert_allclose(ops.diffusion.toarray(), ops.locals[0].diffusion, atol=1e-15)
    np.testing.assert_allclose(ops.mass.toarray(), ops.locals[0].mass, atol=1e-15)


@pytest.mark.parametrize("form", ["diffusion", "mass", "convection"])
def test_global_form_is_sum_of_local_forms(square_geometry, rng, form):
    ops = build_discrete_operators(square_geometry, 1, cubic_vortex(2.0))
    a = rng.standard_normal(ops.n_dofs)
    b = rng.standard_normal(ops.n_dofs)
    matrix = getattr(ops, form)
    expected = sum(ops.dofmap.gather(b, e) @ getattr(loc, form) @ ops.dofmap.gather(a, e)
                   for e, loc in enumerate(ops.locals))
    assert b @ (matrix @ a) == pytest.approx(expected, rel=1e-12)


def test_convection_annihilates_constants(square_geometry):
    ops = build_discrete_operators(square_geometry, 1, cubic_vortex(2.0), OperatorOptions())
    one = interpolate_field(lambda x: np.ones(len(x)), ops)
    np.testing.assert_allclose(ops.convection @ one, 0.0, atol=1e-12)


def test_assembly_rejects_wrong_local_size(square_mesh):
    dofmap = build_dof_map(square_mesh, 0)
    with pytest.raises(AssemblyError):
        assemble_matrices([np.eye(5)] * 4, dofmap)


def test_assembly_rejects_wrong_element_count(operators_k0):
    with pytest.raises(AssemblyError):
        assemble_global("diffusion", operators_k0.locals[:2], operators_k0.dofmap)


def test_unknown_form(operators_k0):
    with pytest.raises(ValueError):
        assemble_global("reaction", operators_k0.locals, operators_k0.dofmap)


def test_operators_metadata(operators_k0):
    assert operators_k0.n_dofs == 24
    assert operators_k0.k == 0
    np.testing.assert_array_equal(operators_k0.cell_coefficients(np.arange(24.0), 1), [3.0, 4.0, 5.0])
