"""
Static condensation of the linearised step problem.

Cell unknowns of c and w only couple inside their element, so the cell
block of the Jacobian is block diagonal with one (2 dim P^{k+1})^2 block
per element. Eliminating it leaves a system on the face unknowns of both
fields plus the mass multiplier.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgError, solve

from solver.dofmap import DofMap
from utils.errors import CondensationError

logger = logging.getLogger("hho_ch.solver.condensation")


@dataclass(eq=False)
class CondensedSystem:
    """Face-only system plus what is needed to recover the cell unknowns."""
    matrix: sp.csr_matrix
    rhs: np.ndarray
    cell_index: np.ndarray
    skeleton_index: np.ndarray
    cell_inverse: sp.csr_matrix
    cell_skeleton: sp.csr_matrix
    cell_rhs: np.ndarray
    size: int

    @property
    def n_reduced(self) -> int:
        return len(self.skeleton_index)


def condensation_indices(dofmap: DofMap, n_fields: int = 2, n_extra: int = 1):
    """
    Split the unknowns of ``n_fields`` stacked fields into cell and skeleton sets.

    Cell indices are grouped element by element (all fields of one element
    are contiguous); skeleton indices are the face blocks of each field
    followed by the ``n_extra`` trailing scalars.
    """
    n = dofmap.n_dofs
    cell_index = np.concatenate([
        np.concatenate([f * n + dofmap.cell_dofs(e) for f in range(n_fields)])
        for e in range(dofmap.n_elements)
    ]).astype(np.int64)
    faces = np.arange(dofmap.n_cell_dofs, n, dtype=np.int64)
    skeleton_index = np.concatenate(
        [f * n + faces for f in range(n_fields)] + [n_fields * n + np.arange(n_extra, dtype=np.int64)]
    )
    return cell_index, skeleton_index


def static_condense(matrix: sp.spmatrix, rhs: np.ndarray, dofmap: DofMap, n_fields: int = 2,
                    n_extra: int = 1) -> CondensedSystem:
    """
    Eliminate the cell unknowns from ``matrix @ x = rhs``.

    Args:
        matrix: Linearised system (e.g. the Newton Jacobian)
        rhs: Right-hand side
        dofmap: DofMap of one field
        n_fields: Number of stacked hybrid fields
        n_extra: Number of trailing scalar unknowns

    Returns:
        CondensedSystem whose ``matrix`` has n_fields * n_face_dofs + n_extra rows

    Raises:
        CondensationError: a cell block is singular or couples to another element
    """
    J = sp.csr_matrix(matrix)
    rhs = np.asarray(rhs, dtype=float)
    cell_index, skeleton_index = condensation_indices(dofmap, n_fields, n_extra)
    if J.shape[0] != len(cell_index) + len(skeleton_index):
        raise ValueError(f"system of size {J.shape[0]} does not match the DOF map")

    block = n_fields * dofmap.cell_dim
    J_cc = J[cell_index][:, cell_index].tocoo()
    off_block = (J_cc.row // block) != (J_cc.col // block)
    if np.any(off_block & (J_cc.data != 0.0)):
        e = int(J_cc.row[np.flatnonzero(off_block & (J_cc.data != 0.0))[0]] // block)
        raise CondensationError("cell unknowns couple across elements", element=e)
    J_cc = J_cc.tocsr()

    inverses = []
    for e in range(dofmap.n_elements):
        sl = slice(e * block, (e + 1) * block)
        local = J_cc[sl, sl].toarray()
        try:
            inv = solve(local, np.eye(block))
        except LinAlgError as err:
            raise CondensationError(f"singular cell block: {err}", element=e)
        if not np.all(np.isfinite(inv)):
            raise CondensationError("non-finite inverse of the cell block", element=e)
        inverses.append(inv)
    cell_inverse = sp.block_diag(inverses, format='csr')

    J_cs = J[cell_index][:, skeleton_index]
    J_sc = J[skeleton_index][:, cell_index]
    J_ss = J[skeleton_index][:, skeleton_index]
    r_c = rhs[cell_index]
    r_s = rhs[skeleton_index]

    coupling = J_sc @ cell_inverse
    reduced = (J_ss - coupling @ J_cs).tocsr()
    reduced_rhs = r_s - coupling @ r_c
    logger.debug(f"Condensed {len(rhs)} unknowns to {len(skeleton_index)}")
    return CondensedSystem(
        matrix=reduced,
        rhs=reduced_rhs,
        cell_index=cell_index,
        skeleton_index=skeleton_index,
        cell_inverse=cell_inverse,
        cell_skeleton=J_cs.tocsr(),
        cell_rhs=r_c,
        size=len(rhs),
    )


def recover_cell_unknowns(condensed: CondensedSystem, skeleton_solution: np.ndarray) -> np.ndarray:
    """
    Rebuild the full solution from the solution of the condensed system.

    Returns:
        Vector x of the original size solving the uncondensed system
    """
    x_s = np.asarray(skeleton_solution, dtype=float)
    x = np.zeros(condensed.size)
    x[condensed.skeleton_index] = x_s
    x[condensed.cell_index] = condensed.cell_inverse @ (condensed.cell_rhs - condensed.cell_skeleton @ x_s)
    return x
