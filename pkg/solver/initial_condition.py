"""
Discrete initial data and global interpolation.

With a Laplacian available, c_h^0 solves a_h(c_h^0, v) = -(lap c0, v_T)
(plus the boundary flux of c0 when its gradient is known) under the
constraint int c_h^0 = int c0, imposed with one multiplier. Without it
(random data) the cell unknowns are L2 projections of c0 and every face
unknown is the average of the traces projected from its incident cells.
When the datum varies on a scale finer than the mesh size the cell
unknowns are the cell means of c0 instead: both the elliptic projection
and the higher-degree L2 projection of an unresolved interface overshoot
the range of c0, the means stay within it.
"""

import logging
from typing import Callable, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from basis.projection import PROJECTION_BUMP, l2_project_cell, l2_project_face
from basis.quadrature import element_quadrature, face_quadrature
from basis.monomials import FaceBasis
from hho.local_operators import make_cell_basis
from solver.assembly import DiscreteOperators
from utils.errors import HHOError

logger = logging.getLogger("hho_ch.solver.initial_condition")

Field = Callable[[np.ndarray], np.ndarray]

PROJECTIONS = ("auto", "elliptic", "l2", "mean")


def face_geometries(geometry) -> List:
    """FaceGeometry of every global face, taken from its first incident element."""
    mesh = geometry.mesh
    faces: List = [None] * mesh.n_faces
    for element in geometry.elements:
        for local, f in enumerate(element.face_ids):
            if faces[f] is None:
                faces[f] = element.faces[local]
    return faces


def _restrict(field, element_index: int) -> Field:
    """Element-wise fields expose ``restrict``; plain callables are used as is."""
    return field.restrict(element_index) if hasattr(field, "restrict") else field


def domain_integral(field, operators: DiscreteOperators, exactness: Optional[int] = None) -> float:
    """Quadrature of ``field`` over the mesh."""
    order = exactness if exactness is not None else 2 * (operators.k + 1) + PROJECTION_BUMP
    total = 0.0
    for element in operators.geometry.elements:
        rule = element_quadrature(element, order)
        total += float(rule.weights @ np.asarray(_restrict(field, element.index)(rule.points), dtype=float))
    return total


def interpolate_field(field, operators: DiscreteOperators, exactness: Optional[int] = None) -> np.ndarray:
    """
    Global HHO interpolant of a continuous field.

    Cell unknowns are L2(T) projections onto P^{k+1}(T), face unknowns
    L2(F) projections onto P^k(F).
    """
    k = operators.k
    dofmap = operators.dofmap
    out = np.zeros(dofmap.n_dofs)
    for element in operators.geometry.elements:
        basis = make_cell_basis(element, k, operators.options)
        out[dofmap.cell_dofs(element.index)] = l2_project_cell(
            _restrict(field, element.index), element, k + 1, exactness, basis=basis)
    for f, face in enumerate(face_geometries(operators.geometry)):
        out[dofmap.face_dofs(f)] = l2_project_face(field, face, k, exactness)
    return out


def boundary_flux_vector(gradient: Field, operators: DiscreteOperators, exactness: Optional[int] = None) -> np.ndarray:
    """Vector of sum over boundary faces of (grad f . n, v_F)_F."""
    k = operators.k
    order = exactness if exactness is not None else 2 * k + 2 + PROJECTION_BUMP
    dofmap = operators.dofmap
    out = np.zeros(dofmap.n_dofs)
    boundary = set(operators.geometry.mesh.boundary_faces.tolist())
    for element in operators.geometry.elements:
        for local, f in enumerate(element.face_ids):
            if int(f) not in boundary:
                continue
            face = element.faces[local]
            rule = face_quadrature(face, order)
            flux = np.asarray(gradient(rule.points), dtype=float).reshape(-1, 2) @ element.normals[local]
            psi = FaceBasis(face, k).values(rule.points)
            out[dofmap.face_dofs(f)] += psi.T @ (rule.weights * flux)
    return out


def cell_load_vector(field: Field, operators: DiscreteOperators, exactness: Optional[int] = None) -> np.ndarray:
    """Vector of (f, v_T) over every cell test function."""
    k = operators.k
    order = exactness if exactness is not None else 2 * (k + 1) + PROJECTION_BUMP
    dofmap = operators.dofmap
    out = np.zeros(dofmap.n_dofs)
    for element in operators.geometry.elements:
        rule = element_quadrature(element, order)
        phi = make_cell_basis(element, k, operators.options).values(rule.points)
        values = np.asarray(_restrict(field, element.index)(rule.points), dtype=float)
        out[dofmap.cell_dofs(element.index)] = phi.T @ (rule.weights * values)
    return out


def _fallback_initial_condition(c0, operators: DiscreteOperators, degree: Optional[int] = None) -> np.ndarray:
    """Cell projections onto P^degree (default k + 1) with averaged face traces."""
    k = operators.k
    degree = k + 1 if degree is None else degree
    exactness = 2 * (k + 1) + PROJECTION_BUMP
    dofmap = operators.dofmap
    geometry = operators.geometry
    out = np.zeros(dofmap.n_dofs)
    face_sum = np.zeros((dofmap.n_faces, dofmap.face_dim))
    face_count = np.zeros(dofmap.n_faces)
    for element in geometry.elements:
        basis = make_cell_basis(element, k, operators.options)
        cells = dofmap.cell_dofs(element.index)
        coeffs = np.zeros(len(cells))
        projected = l2_project_cell(_restrict(c0, element.index), element, degree, exactness, basis=basis)
        coeffs[:len(projected)] = projected
        out[cells] = coeffs
        trace = lambda x, b=basis, a=coeffs: b.evaluate(a, x)
        for local, f in enumerate(element.face_ids):
            face_sum[f] += l2_project_face(trace, element.faces[local], k, exactness=2 * k + 2)
            face_count[f] += 1
    for f in range(dofmap.n_faces):
        if face_count[f]:
            out[dofmap.face_dofs(f)] = face_sum[f] / face_count[f]
    return out


def solve_initial_condition(c0, laplacian_c0: Optional[Field], operators: DiscreteOperators,
                            gradient_c0: Optional[Field] = None,
                            interface_width: Optional[float] = None,
                            projection: str = "auto") -> np.ndarray:
    """
    Discrete initial order parameter.

    Args:
        c0: Initial datum (callable, or element-wise field with ``restrict``)
        laplacian_c0: Laplacian of c0, or None for the projection fallback
        operators: DiscreteOperators
        gradient_c0: Gradient of c0; adds the boundary flux term when given
        interface_width: Length scale of c0; with ``projection="auto"`` the
            cell means are used when it is below the mesh size
        projection: "auto", "elliptic", "l2" (projection onto P^{k+1}) or
            "mean" (cell means)

    Returns:
        Hybrid vector c_h^0 with int c_h^0 = int c0

    Raises:
        ValueError: unknown projection, or "elliptic" without a Laplacian
    """
    if projection not in PROJECTIONS:
        raise ValueError(f"projection must be one of {PROJECTIONS}")
    if projection == "elliptic" and laplacian_c0 is None:
        raise ValueError("elliptic initial projection needs the Laplacian of c0")
    if projection == "l2":
        return _fallback_initial_condition(c0, operators)
    if projection == "mean":
        return _fallback_initial_condition(c0, operators, degree=0)
    if laplacian_c0 is None:
        logger.info("Initial datum has no Laplacian, using L2 projection with averaged face traces")
        return _fallback_initial_condition(c0, operators)
    h = operators.geometry.h
    if projection == "auto" and interface_width is not None and interface_width < h:
        logger.info(f"Interface width {interface_width:.3g} is below the mesh size {h:.3g}, "
                    f"using cell means with averaged face traces")
        return _fallback_initial_condition(c0, operators, degree=0)

    rhs = -cell_load_vector(laplacian_c0, operators)
    if gradient_c0 is not None:
        rhs += boundary_flux_vector(gradient_c0, operators)
    target = domain_integral(c0, operators)
    g = sp.csr_matrix(operators.mass_vector.reshape(-1, 1))
    matrix = sp.bmat([[operators.diffusion, g], [g.T, None]], format='csc')
    solution = spsolve(matrix, np.concatenate([rhs, [target]]))
    if not np.all(np.isfinite(solution)):
        raise HHOError("initial condition system is singular")
    c = np.asarray(solution[:-1], dtype=float)
    logger.debug(f"Initial condition: mass {operators.mass_vector @ c:.6e} (target {target:.6e})")
    return c
