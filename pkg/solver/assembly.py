"""
Sparse assembly of the global HHO forms.

Local matrices are scattered into COO triplets in element order and
summed by the CSR conversion, so the assembled matrix does not depend on
how the local operators were computed (sequentially or by workers).
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from hho.local_operators import LocalOperatorSet, OperatorOptions, build_all_local_operators
from solver.dofmap import DofMap, build_dof_map
from utils.errors import AssemblyError

logger = logging.getLogger("hho_ch.solver.assembly")

FORMS = ("diffusion", "convection", "mass", "stabilization", "upwind", "convection_consistency")


def _local_matrix(local: LocalOperatorSet, form: str) -> np.ndarray:
    if form not in FORMS:
        raise ValueError(f"Unknown form '{form}', expected one of {FORMS}")
    return getattr(local, form)


def assemble_matrices(local_matrices: Sequence[np.ndarray], dofmap: DofMap) -> sp.csr_matrix:
    """Assemble square local matrices given in element order."""
    n = dofmap.n_dofs
    rows, cols, data = [], [], []
    for e, mat in enumerate(local_matrices):
        idx = dofmap.element_dofs(e)
        if mat.shape != (len(idx), len(idx)):
            raise AssemblyError(f"element {e}: local matrix {mat.shape} does not match {len(idx)} local unknowns")
        rows.append(np.repeat(idx, len(idx)))
        cols.append(np.tile(idx, len(idx)))
        data.append(mat.ravel())
    if not rows:
        return sp.csr_matrix((n, n))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    if rows.min() < 0 or rows.max() >= n:
        raise AssemblyError("scatter index out of range, DOF map is inconsistent")
    return sp.coo_matrix((np.concatenate(data), (rows, cols)), shape=(n, n)).tocsr()


def assemble_global(form: str, locals_: Sequence[LocalOperatorSet], dofmap: DofMap) -> sp.csr_matrix:
    """
    Assemble one bilinear form over all elements.

    Args:
        form: 'diffusion', 'convection' or 'mass' (also 'stabilization',
            'upwind', 'convection_consistency')
        locals_: LocalOperatorSet of every element, in element order
        dofmap: DofMap of the field

    Returns:
        CSR matrix with v^T X u = sum_T local form(u_T, v_T)

    Raises:
        AssemblyError: local sizes or indices inconsistent with the DOF map
    """
    if len(locals_) != dofmap.n_elements:
        raise AssemblyError(f"{len(locals_)} local operator sets for {dofmap.n_elements} elements")
    return assemble_matrices([_local_matrix(loc, form) for loc in locals_], dofmap)


def assemble_mass_vector(locals_: Sequence[LocalOperatorSet], dofmap: DofMap) -> np.ndarray:
    """Vector g with g . v = integral of the cell polynomials of v over the domain."""
    g = np.zeros(dofmap.n_dofs)
    for e, loc in enumerate(locals_):
        g[dofmap.cell_dofs(e)] = loc.cell_moments
    return g


@dataclass(eq=False)
class DiscreteOperators:
    """Assembled operators of one mesh, degree and velocity."""
    geometry: object
    k: int
    dofmap: DofMap
    locals: List[LocalOperatorSet]
    diffusion: sp.csr_matrix
    convection: sp.csr_matrix
    mass: sp.csr_matrix
    mass_vector: np.ndarray
    velocity: Optional[object] = None
    options: Optional[OperatorOptions] = None

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    def cell_coefficients(self, vector: np.ndarray, element: int) -> np.ndarray:
        return np.asarray(vector)[self.dofmap.cell_dofs(element)]


def build_discrete_operators(geometry, k: int, velocity=None, options: Optional[OperatorOptions] = None,
                             n_jobs: int = 1) -> DiscreteOperators:
    """
    Build local operators on every element and assemble the global matrices.

    Args:
        geometry: GeometryCache of the mesh
        k: Face polynomial degree
        velocity: VelocityField (None for u = 0)
        options: OperatorOptions
        n_jobs: joblib workers for the element loop

    Returns:
        DiscreteOperators
    """
    options = options or OperatorOptions()
    dofmap = build_dof_map(geometry.mesh, k)
    locals_ = build_all_local_operators(geometry, k, velocity, options, n_jobs=n_jobs)
    ops = DiscreteOperators(
        geometry=geometry,
        k=k,
        dofmap=dofmap,
        locals=locals_,
        diffusion=assemble_global("diffusion", locals_, dofmap),
        convection=assemble_global("convection", locals_, dofmap),
        mass=assemble_global("mass", locals_, dofmap),
        mass_vector=assemble_mass_vector(locals_, dofmap),
        velocity=velocity,
        options=options,
    )
    logger.info(f"Assembled operators: {geometry.mesh.n_elements} elements, {dofmap.n_dofs} unknowns per field, k={k}")
    return ops
