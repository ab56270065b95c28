"""
L2 projectors on elements and faces and the HHO interpolator.

Fields are vectorised callables taking an (n, 2) array of points and
returning n values.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from basis.monomials import CellBasis, FaceBasis, polynomial_dimension
from basis.quadrature import element_quadrature, face_quadrature
from utils.errors import ProjectionError

logger = logging.getLogger("hho_ch.basis.projection")

Field = Callable[[np.ndarray], np.ndarray]

# extra quadrature degrees used when the projected field is not a polynomial
PROJECTION_BUMP = 4


@dataclass
class LocalDofVector:
    """
    Cell and face coefficients of one element, ordered (cell, faces in F_T order).

    ``values`` is the flat vector; ``cell_dim`` and ``face_dim`` describe
    the block sizes.
    """
    values: np.ndarray
    cell_dim: int
    face_dim: int
    n_faces: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = self.cell_dim + self.n_faces * self.face_dim
        if self.values.shape != (expected,):
            raise ValueError(f"local DOF vector has length {self.values.shape}, expected {expected}")

    @classmethod
    def from_blocks(cls, cell: np.ndarray, faces: Sequence[np.ndarray]) -> "LocalDofVector":
        faces = [np.asarray(f, dtype=float) for f in faces]
        face_dim = len(faces[0]) if faces else 0
        return cls(np.concatenate([np.asarray(cell, dtype=float)] + faces), len(cell), face_dim, len(faces))

    @classmethod
    def zeros(cls, k: int, n_faces: int) -> "LocalDofVector":
        cell_dim = polynomial_dimension(k + 1)
        return cls(np.zeros(cell_dim + n_faces * (k + 1)), cell_dim, k + 1, n_faces)

    @property
    def cell(self) -> np.ndarray:
        return self.values[: self.cell_dim]

    def face(self, i: int) -> np.ndarray:
        start = self.cell_dim + i * self.face_dim
        return self.values[start: start + self.face_dim]

    @property
    def faces(self) -> Tuple[np.ndarray, ...]:
        return tuple(self.face(i) for i in range(self.n_faces))

    def __len__(self) -> int:
        return len(self.values)


def _solve_mass(mass: np.ndarray, rhs: np.ndarray, where: str) -> np.ndarray:
    try:
        factor = cho_factor(mass)
    except LinAlgError as e:
        raise ProjectionError(f"singular local mass matrix on {where}: {e}")
    return cho_solve(factor, rhs)


def cell_basis_for(element, degree: int) -> CellBasis:
    return CellBasis(element.centroid, element.diameter, degree, element=element.index)


def l2_project_cell(f: Field, element, degree: int, exactness: Optional[int] = None,
                    basis: Optional[CellBasis] = None) -> np.ndarray:
    """
    L2(T) projection of ``f`` onto P^degree(T).

    Args:
        f: Field to project
        element: ElementGeometry
        degree: Target polynomial degree
        exactness: Quadrature exactness; defaults to 2*degree + 4
        basis: Cell basis to use (scaled monomials of ``degree`` by default)

    Returns:
        Coefficients in the cell basis

    Raises:
        ProjectionError: the local mass matrix is not positive definite
    """
    basis = basis or cell_basis_for(element, degree)
    rule = element_quadrature(element, exactness if exactness is not None else 2 * degree + PROJECTION_BUMP)
    phi = basis.values(rule.points)[:, : polynomial_dimension(degree)]
    mass = phi.T @ (rule.weights[:, None] * phi)
    rhs = phi.T @ (rule.weights * np.asarray(f(rule.points), dtype=float))
    return _solve_mass(mass, rhs, f"element {element.index}")


def l2_project_face(f: Field, face, degree: int, exactness: Optional[int] = None) -> np.ndarray:
    """
    L2(F) projection of ``f`` onto P^degree(F), the projector pi_F.

    Args:
        f: Field to project, evaluated at points of the face
        face: FaceGeometry
        degree: Target polynomial degree
        exactness: Quadrature exactness; defaults to 2*degree + 4

    Returns:
        Coefficients in the face basis
    """
    basis = FaceBasis(face, degree)
    rule = face_quadrature(face, exactness if exactness is not None else 2 * degree + PROJECTION_BUMP)
    psi = basis.values(rule.points)
    mass = psi.T @ (rule.weights[:, None] * psi)
    rhs = psi.T @ (rule.weights * np.asarray(f(rule.points), dtype=float))
    return _solve_mass(mass, rhs, f"face {face.index}")


def interpolate(f: Field, element, k: int, exactness: Optional[int] = None) -> LocalDofVector:
    """
    HHO interpolant: cell projection onto P^{k+1}(T), face projections onto P^k(F).

    Args:
        f: Field to interpolate
        element: ElementGeometry
        k: Face polynomial degree
        exactness: Quadrature exactness for both projections (optional)

    Returns:
        LocalDofVector of the element
    """
    cell = l2_project_cell(f, element, k + 1, exactness)
    faces = [l2_project_face(f, face, k, exactness) for face in element.faces]
    return LocalDofVector(np.concatenate([cell] + faces), len(cell), k + 1, len(faces))
