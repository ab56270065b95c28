"""
Global numbering of the hybrid unknowns of one scalar field.

Cell blocks come first, element by element, then one shared block per
face. Interface blocks are therefore single valued: both incident
elements scatter into the same global indices.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from basis.monomials import polynomial_dimension
from utils.errors import AssemblyError

logger = logging.getLogger("hho_ch.solver.dofmap")


@dataclass(frozen=True, eq=False)
class DofMap:
    """Offsets and element scatter tables for one field."""
    k: int
    cell_dim: int
    face_dim: int
    n_elements: int
    n_faces: int
    cell_offsets: np.ndarray
    face_offsets: np.ndarray
    scatter: Tuple[np.ndarray, ...]

    @property
    def n_cell_dofs(self) -> int:
        return self.n_elements * self.cell_dim

    @property
    def n_face_dofs(self) -> int:
        return self.n_faces * self.face_dim

    @property
    def n_dofs(self) -> int:
        return self.n_cell_dofs + self.n_face_dofs

    def cell_dofs(self, element: int) -> np.ndarray:
        start = self.cell_offsets[element]
        return np.arange(start, start + self.cell_dim)

    def face_dofs(self, face: int) -> np.ndarray:
        start = self.face_offsets[face]
        return np.arange(start, start + self.face_dim)

    def element_dofs(self, element: int) -> np.ndarray:
        """Global indices of the local unknowns of ``element`` in local order."""
        return self.scatter[element]

    def gather(self, vector: np.ndarray, element: int) -> np.ndarray:
        return np.asarray(vector)[self.scatter[element]]

    def scatter_add(self, local_vectors) -> np.ndarray:
        """Sum per-element vectors into a global vector, in element order."""
        out = np.zeros(self.n_dofs)
        for e, local in enumerate(local_vectors):
            np.add.at(out, self.scatter[e], local)
        return out

    def face_multiplicity(self) -> np.ndarray:
        """How many elements reference each face block."""
        counts = np.zeros(self.n_faces, dtype=np.int64)
        for idx in self.scatter:
            faces = (idx[self.cell_dim::self.face_dim] - self.n_cell_dofs) // self.face_dim
            counts[faces] += 1
        return counts


def build_dof_map(mesh, k: int) -> DofMap:
    """
    Number the unknowns of U_h^k on ``mesh``.

    Args:
        mesh: Mesh
        k: Face polynomial degree

    Returns:
        DofMap with n_cell_dofs = n_elements * dim P^{k+1} and
        n_face_dofs = n_faces * (k + 1)
    """
    if k < 0:
        raise ValueError("polynomial degree k must be non-negative")
    cell_dim = polynomial_dimension(k + 1)
    face_dim = k + 1
    n_elements = mesh.n_elements
    n_faces = mesh.n_faces
    cell_offsets = np.arange(n_elements, dtype=np.int64) * cell_dim
    face_offsets = n_elements * cell_dim + np.arange(n_faces, dtype=np.int64) * face_dim

    scatter = []
    for e in range(n_elements):
        faces = np.asarray(mesh.element_faces[e], dtype=np.int64)
        if faces.size and (faces.min() < 0 or faces.max() >= n_faces):
            raise AssemblyError(f"element {e} references a face outside [0, {n_faces})")
        blocks = [cell_offsets[e] + np.arange(cell_dim)]
        blocks += [face_offsets[f] + np.arange(face_dim) for f in faces]
        scatter.append(np.concatenate(blocks).astype(np.int64))

    dofmap = DofMap(k, cell_dim, face_dim, n_elements, n_faces, cell_offsets, face_offsets, tuple(scatter))
    logger.debug(f"DOF map: {dofmap.n_cell_dofs} cell + {dofmap.n_face_dofs} face unknowns (k={k})")
    return dofmap
