"""
Shared fixtures for the test suite.
"""

import os
import sys

import numpy as np
import pytest

# Add the project root to the path so we can import modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from mesh import build_mesh, compute_geometry, generate_cartesian_mesh
from solver.assembly import build_discrete_operators

MESH_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data", "meshes")


@pytest.fixture
def mesh_dir():
    """Directory of the fvca-poly fixture meshes."""
    return MESH_DIR


@pytest.fixture
def square_mesh():
    """2x2 Cartesian mesh of the unit square."""
    return generate_cartesian_mesh(2, 2)


@pytest.fixture
def square_geometry(square_mesh):
    return compute_geometry(square_mesh)


@pytest.fixture
def unit_element():
    """Geometry of the single unit square element."""
    mesh = build_mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2, 3)])
    return compute_geometry(mesh).element(0)


@pytest.fixture
def pentagon_element():
    """Irregular convex pentagon."""
    mesh = build_mesh([(0.0, 0.0), (1.2, 0.1), (1.5, 0.9), (0.7, 1.6), (-0.2, 0.8)], [(0, 1, 2, 3, 4)])
    return compute_geometry(mesh).element(0)


@pytest.fixture
def operators_k0(square_geometry):
    return build_discrete_operators(square_geometry, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
