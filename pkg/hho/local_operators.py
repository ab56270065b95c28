"""
Per-element HHO operators.

For an element T and face degree k the local unknowns are a P^{k+1}(T)
cell polynomial followed by one P^k(F) polynomial per face. This module
builds, for one element:
- the potential reconstruction P_T (p_T^{k+1} as a matrix acting on the
  local unknowns) and the P^{k+1}(T) stiffness K
- the face stabilisation S_T and the diffusion matrix A_T = P^T K P + S_T
- the convection matrix B_T = consistency + upwind, with the consistency
  block written from the definition of the convective derivative
  reconstruction (the reconstruction itself is never formed)
- the cell mass matrix M_T, zero on the face blocks

Matrices are oriented so that the bilinear form reads form(u, v) = v^T X u.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.linalg import LinAlgError, solve

from basis.monomials import CellBasis, FaceBasis, polynomial_dimension
from basis.quadrature import QuadRule, element_quadrature, face_quadrature
from utils.errors import LocalOperatorError

logger = logging.getLogger("hho_ch.hho.local_operators")

UPWIND_VARIANTS = ("exact", "projected")


@dataclass(frozen=True)
class OperatorOptions:
    """Switches for the local operator construction."""
    upwind_projection: str = "exact"
    orthonormalize: bool = False
    nonlinear_exactness: Optional[int] = None

    def __post_init__(self):
        if self.upwind_projection not in UPWIND_VARIANTS:
            raise ValueError(f"upwind_projection must be one of {UPWIND_VARIANTS}")


def make_cell_basis(element, k: int, options: Optional[OperatorOptions] = None) -> CellBasis:
    """The P^{k+1}(T) basis the local operators are written in."""
    options = options or OperatorOptions()
    rule = element_quadrature(element, 2 * (k + 1)) if options.orthonormalize else None
    return CellBasis(element.centroid, element.diameter, k + 1,
                     orthonormalize=options.orthonormalize, quadrature=rule, element=element.index)


class LocalContext:
    """Bases, quadrature rules and sampled basis values for one element."""

    def __init__(self, element, k: int, options: OperatorOptions = OperatorOptions(), extra_degree: int = 0):
        if k < 0:
            raise ValueError("polynomial degree k must be non-negative")
        self.element = element
        self.k = int(k)
        self.options = options
        self.cell_dim = polynomial_dimension(k + 1)
        self.face_dim = k + 1
        self.n_faces = element.n_faces
        self.size = self.cell_dim + self.n_faces * self.face_dim

        order = 2 * (k + 1) + int(extra_degree)
        self.cell_rule = element_quadrature(element, order)
        self.cell_basis = make_cell_basis(element, k, options)
        self.phi = self.cell_basis.values(self.cell_rule.points)
        self.grad_phi = self.cell_basis.gradients(self.cell_rule.points)

        self.face_bases = [FaceBasis(face, k) for face in element.faces]
        self.face_rules = [face_quadrature(face, order) for face in element.faces]
        self.face_phi = [self.cell_basis.values(r.points) for r in self.face_rules]
        self.face_grad_phi = [self.cell_basis.gradients(r.points) for r in self.face_rules]
        self.face_psi = [b.values(r.points) for b, r in zip(self.face_bases, self.face_rules)]

    def face_slice(self, i: int) -> slice:
        start = self.cell_dim + i * self.face_dim
        return slice(start, start + self.face_dim)

    def face_mass(self, i: int, weight: Optional[np.ndarray] = None) -> np.ndarray:
        w = self.face_rules[i].weights if weight is None else self.face_rules[i].weights * weight
        psi = self.face_psi[i]
        return psi.T @ (w[:, None] * psi)

    def trace_projection(self, i: int) -> np.ndarray:
        """Matrix of pi_F^k applied to the trace of cell basis functions on face i."""
        rule = self.face_rules[i]
        coupling = self.face_psi[i].T @ (rule.weights[:, None] * self.face_phi[i])
        return solve(self.face_mass(i), coupling, assume_a='pos')

    def difference_operator(self, i: int) -> np.ndarray:
        """Coefficients of pi_F^k(v_F - v_T) on face i as a (face_dim x size) matrix."""
        D = np.zeros((self.face_dim, self.size))
        D[:, self.face_slice(i)] = np.eye(self.face_dim)
        D[:, : self.cell_dim] -= self.trace_projection(i)
        return D

    def difference_values(self, i: int) -> np.ndarray:
        """Values of v_F - v_T at the quadrature points of face i, (n_points x size)."""
        E = np.zeros((self.face_rules[i].size, self.size))
        E[:, self.face_slice(i)] = self.face_psi[i]
        E[:, : self.cell_dim] = -self.face_phi[i]
        return E


@dataclass(eq=False)
class LocalOperatorSet:
    """All local matrices of one element."""
    element: int
    k: int
    cell_dim: int
    face_dim: int
    n_faces: int
    reconstruction: np.ndarray
    stiffness: np.ndarray
    stabilization: np.ndarray
    diffusion: np.ndarray
    mass: np.ndarray
    cell_mass: np.ndarray
    cell_moments: np.ndarray
    convection_consistency: np.ndarray
    upwind: np.ndarray
    nonlinear_rule: QuadRule
    nonlinear_phi: np.ndarray
    face_ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def size(self) -> int:
        return self.cell_dim + self.n_faces * self.face_dim

    @property
    def convection(self) -> np.ndarray:
        return self.convection_consistency + self.upwind


def _context(element, k, options, extra_degree=0, context=None) -> LocalContext:
    if context is not None:
        return context
    return LocalContext(element, k, options or OperatorOptions(), extra_degree)


def potential_reconstruction_matrix(element, k: int, options: Optional[OperatorOptions] = None,
                                    context: Optional[LocalContext] = None):
    """
    Potential reconstruction p_T^{k+1} as a matrix.

    For every local vector v, p = P v solves
    (grad p, grad z)_T = (grad v_T, grad z)_T + sum_F (v_F - v_T, grad z . n_TF)_F
    for all z in P^{k+1}(T), which is the integrated-by-parts form of
    -(v_T, lap z)_T + sum_F (v_F, grad z . n_TF)_F. The equation tested with
    the constant basis function is trivial and is replaced by the closure
    condition int_T (p - v_T) = 0.

    Args:
        element: ElementGeometry
        k: Face degree
        options: Operator options
        context: Precomputed LocalContext (optional)

    Returns:
        Tuple (P, K): reconstruction (cell_dim x size) and P^{k+1}(T) stiffness

    Raises:
        LocalOperatorError: singular reconstruction system
    """
    ctx = _context(element, k, options, context=context)
    nT = ctx.cell_dim
    w = ctx.cell_rule.weights
    K = np.einsum('q,qid,qjd->ij', w, ctx.grad_phi, ctx.grad_phi)

    rhs = np.zeros((nT, ctx.size))
    rhs[:, :nT] = K
    for i, normal in enumerate(element.normals):
        wf = ctx.face_rules[i].weights
        dn = ctx.face_grad_phi[i] @ normal
        rhs[:, ctx.face_slice(i)] += dn.T @ (wf[:, None] * ctx.face_psi[i])
        rhs[:, :nT] -= dn.T @ (wf[:, None] * ctx.face_phi[i])

    moments = w @ ctx.phi
    lhs = K.copy()
    lhs[0, :] = moments
    rhs[0, :] = 0.0
    rhs[0, :nT] = moments
    try:
        P = solve(lhs, rhs)
    except LinAlgError as e:
        raise LocalOperatorError(f"singular potential reconstruction system: {e}", element=element.index)
    if not np.all(np.isfinite(P)):
        raise LocalOperatorError("non-finite potential reconstruction", element=element.index)
    return P, K


def diffusive_stabilization_matrix(element, k: int, options: Optional[OperatorOptions] = None,
                                   context: Optional[LocalContext] = None) -> np.ndarray:
    """
    S_T = sum_F h_F^{-1} D_F^T M_F D_F with D_F v = pi_F^k(v_F - v_T).

    Args:
        element: ElementGeometry
        k: Face degree

    Returns:
        Symmetric positive semidefinite (size x size) matrix
    """
    ctx = _context(element, k, options, context=context)
    S = np.zeros((ctx.size, ctx.size))
    for i, face in enumerate(element.faces):
        D = ctx.difference_operator(i)
        S += D.T @ ctx.face_mass(i) @ D / face.diameter
    return 0.5 * (S + S.T)


def local_diffusion_matrix(element, k: int, options: Optional[OperatorOptions] = None,
                           context: Optional[LocalContext] = None) -> np.ndarray:
    """A_T = P_T^T K P_T + S_T."""
    ctx = _context(element, k, options, context=context)
    P, K = potential_reconstruction_matrix(element, k, context=ctx)
    A = P.T @ K @ P + diffusive_stabilization_matrix(element, k, context=ctx)
    return 0.5 * (A + A.T)


def local_mass_matrix(element, k: int, options: Optional[OperatorOptions] = None,
                      context: Optional[LocalContext] = None) -> np.ndarray:
    """Gram matrix of the P^{k+1}(T) basis, padded with zero face blocks."""
    ctx = _context(element, k, options, context=context)
    w = ctx.cell_rule.weights
    M = np.zeros((ctx.size, ctx.size))
    M[: ctx.cell_dim, : ctx.cell_dim] = ctx.phi.T @ (w[:, None] * ctx.phi)
    return M


def convection_matrices(element, k: int, velocity, options: Optional[OperatorOptions] = None,
                        context: Optional[LocalContext] = None):
    """
    Consistency and upwind parts of the local convective form.

    consistency: (G v, w_T)_T = -(v_T, u . grad w_T)_T + sum_F (v_F, (u . n_TF) w_T)_F
    upwind: sum_F (((|u.n_TF| - u.n_TF)/2) (u_F - u_T), v_F - v_T)_F, integrated
    by quadrature ("exact") or with pi_F^k applied to both differences
    ("projected").

    Returns:
        Tuple (consistency, upwind), both (size x size)
    """
    options = options or (context.options if context is not None else OperatorOptions())
    ctx = _context(element, k, options, extra_degree=velocity.extra_degree, context=context)
    nT = ctx.cell_dim
    C = np.zeros((ctx.size, ctx.size))
    U = np.zeros((ctx.size, ctx.size))

    u_cell = velocity(ctx.cell_rule.points)
    u_grad = np.einsum('qd,qid->qi', u_cell, ctx.grad_phi)
    C[:nT, :nT] = -u_grad.T @ (ctx.cell_rule.weights[:, None] * ctx.phi)

    for i, normal in enumerate(element.normals):
        rule = ctx.face_rules[i]
        flux = velocity(rule.points) @ normal
        C[:nT, ctx.face_slice(i)] += ctx.face_phi[i].T @ ((rule.weights * flux)[:, None] * ctx.face_psi[i])
        inflow = 0.5 * (np.abs(flux) - flux)
        if not np.any(inflow):
            continue
        if ctx.options.upwind_projection == "projected":
            D = ctx.difference_operator(i)
            U += D.T @ ctx.face_mass(i, weight=inflow) @ D
        else:
            E = ctx.difference_values(i)
            U += E.T @ ((rule.weights * inflow)[:, None] * E)
    return C, U


def local_convection_matrix(element, k: int, velocity, options: Optional[OperatorOptions] = None,
                            context: Optional[LocalContext] = None) -> np.ndarray:
    """B_T = consistency + upwind; see convection_matrices."""
    C, U = convection_matrices(element, k, velocity, options, context)
    return C + U


def build_local_operators(element, k: int, velocity=None,
                          options: Optional[OperatorOptions] = None) -> LocalOperatorSet:
    """
    Build every local matrix of one element.

    Args:
        element: ElementGeometry
        k: Face degree
        velocity: VelocityField or None for pure diffusion
        options: OperatorOptions

    Returns:
        LocalOperatorSet
    """
    options = options or OperatorOptions()
    extra = velocity.extra_degree if velocity is not None else 0
    ctx = LocalContext(element, k, options, extra_degree=extra)
    P, K = potential_reconstruction_matrix(element, k, context=ctx)
    S = diffusive_stabilization_matrix(element, k, context=ctx)
    A = P.T @ K @ P + S
    M = local_mass_matrix(element, k, context=ctx)
    if velocity is not None and not velocity.is_zero:
        C, U = convection_matrices(element, k, velocity, context=ctx)
    else:
        C = np.zeros_like(A)
        U = np.zeros_like(A)

    nl_order = options.nonlinear_exactness if options.nonlinear_exactness is not None else 4 * (k + 1)
    nl_rule = element_quadrature(element, nl_order)
    nT = ctx.cell_dim
    return LocalOperatorSet(
        element=element.index,
        k=k,
        cell_dim=nT,
        face_dim=ctx.face_dim,
        n_faces=ctx.n_faces,
        reconstruction=P,
        stiffness=K,
        stabilization=S,
        diffusion=0.5 * (A + A.T),
        mass=M,
        cell_mass=M[:nT, :nT].copy(),
        cell_moments=ctx.cell_rule.weights @ ctx.phi,
        convection_consistency=C,
        upwind=U,
        nonlinear_rule=nl_rule,
        nonlinear_phi=ctx.cell_basis.values(nl_rule.points),
        face_ids=np.asarray(element.face_ids, dtype=np.int64),
    )


def build_all_local_operators(geometry, k: int, velocity=None, options: Optional[OperatorOptions] = None,
                              n_jobs: int = 1) -> List[LocalOperatorSet]:
    """
    Build the operator sets of every element, optionally in parallel.

    Results are returned in element order whatever the number of workers.
    """
    elements: Sequence = geometry.elements
    if n_jobs == 1:
        locals_ = [build_local_operators(el, k, velocity, options) for el in elements]
    else:
        locals_ = Parallel(n_jobs=n_jobs)(
            delayed(build_local_operators)(el, k, velocity, options) for el in elements
        )
    logger.debug(f"Built local operators for {len(locals_)} elements (k={k})")
    return list(locals_)
