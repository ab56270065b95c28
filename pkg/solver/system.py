"""
Discrete convective Cahn-Hilliard system of one backward Euler step.

The unknown is X = [c, w, lam] with c and w hybrid vectors of one
DofMap each and lam the multiplier of the mass constraint. For a time
step from c_old the residual reads

    R1 = M (c - c_old) / tau + A w / Pe + B c + lam g - F1
    R2 = M w - Phi'(c) - gamma^2 A c - F2
    R3 = g . c - m

where M is the cell mass matrix, A the diffusion matrix, B the
convection matrix, g the mass vector and (F1, F2) optional load vectors
(zero for the physical problem). The mass row and column are dropped
when the constraint is switched off.
"""

import logging
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from solver.assembly import DiscreteOperators, assemble_matrices

logger = logging.getLogger("hho_ch.solver.system")

LoadFunction = Callable[[float], Tuple[np.ndarray, np.ndarray]]


def double_well(c: np.ndarray) -> np.ndarray:
    """Phi(c) = (1 - c^2)^2 / 4."""
    return 0.25 * (1.0 - c ** 2) ** 2


def double_well_derivative(c: np.ndarray) -> np.ndarray:
    return c ** 3 - c


def double_well_second_derivative(c: np.ndarray) -> np.ndarray:
    return 3.0 * c ** 2 - 1.0


class CahnHilliardSystem:
    """
    Residual and Jacobian of the coupled (c, w) step problem.

    Args:
        operators: DiscreteOperators of the mesh
        gamma: Interface parameter
        peclet: Peclet number
        tau: Time step
        mass_target: Value of g . c imposed by the constraint
        mass_constraint: Append the multiplier row and column
        loads: Optional callable t -> (F1, F2)
    """

    def __init__(self, operators: DiscreteOperators, gamma: float, peclet: float, tau: float,
                 mass_target: float = 0.0, mass_constraint: bool = True,
                 loads: Optional[LoadFunction] = None):
        if gamma <= 0 or peclet <= 0 or tau <= 0:
            raise ValueError("gamma, peclet and tau must be positive")
        self.operators = operators
        self.gamma = float(gamma)
        self.peclet = float(peclet)
        self.tau = float(tau)
        self.mass_target = float(mass_target)
        self.mass_constraint = bool(mass_constraint)
        self.loads = loads
        self.n = operators.n_dofs
        self.size = 2 * self.n + (1 if self.mass_constraint else 0)

    # --- vector layout ---------------------------------------------------

    def split(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
        n = self.n
        lam = float(X[2 * n]) if self.mass_constraint else 0.0
        return X[:n], X[n: 2 * n], lam

    def join(self, c: np.ndarray, w: np.ndarray, lam: float = 0.0) -> np.ndarray:
        parts = [np.asarray(c, dtype=float), np.asarray(w, dtype=float)]
        if self.mass_constraint:
            parts.append(np.array([lam], dtype=float))
        return np.concatenate(parts)

    # --- nonlinear terms -------------------------------------------------

    def _cell_values(self, c: np.ndarray, element: int):
        loc = self.operators.locals[element]
        coeffs = self.operators.cell_coefficients(c, element)
        return loc, loc.nonlinear_phi @ coeffs

    def nonlinear_vector(self, c: np.ndarray) -> np.ndarray:
        """Vector of (Phi'(c_T), psi_T) over every cell test function."""
        out = np.zeros(self.n)
        dofmap = self.operators.dofmap
        for e in range(dofmap.n_elements):
            loc, values = self._cell_values(c, e)
            weights = loc.nonlinear_rule.weights * double_well_derivative(values)
            out[dofmap.cell_dofs(e)] = loc.nonlinear_phi.T @ weights
        return out

    def nonlinear_jacobian(self, c: np.ndarray) -> sp.csr_matrix:
        """Matrix of (Phi''(c_T) phi_j, psi_i), zero outside the cell blocks."""
        local_matrices = []
        for e, loc in enumerate(self.operators.locals):
            _, values = self._cell_values(c, e)
            weights = loc.nonlinear_rule.weights * double_well_second_derivative(values)
            block = np.zeros((loc.size, loc.size))
            block[: loc.cell_dim, : loc.cell_dim] = loc.nonlinear_phi.T @ (weights[:, None] * loc.nonlinear_phi)
            local_matrices.append(block)
        return assemble_matrices(local_matrices, self.operators.dofmap)

    def load_vectors(self, time: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
        if self.loads is None or time is None:
            return np.zeros(self.n), np.zeros(self.n)
        F1, F2 = self.loads(time)
        return np.asarray(F1, dtype=float), np.asarray(F2, dtype=float)

    # --- residual and Jacobian ------------------------------------------

    def residual(self, X: np.ndarray, c_old: np.ndarray, time: Optional[float] = None) -> np.ndarray:
        """
        Discrete residual of the step problem.

        Args:
            X: Current iterate [c, w, lam]
            c_old: Order parameter at the previous time level
            time: Time of the new level (used by the load vectors)

        Returns:
            Residual vector of length ``size``
        """
        ops = self.operators
        c, w, lam = self.split(X)
        F1, F2 = self.load_vectors(time)
        R1 = ops.mass @ (c - c_old) / self.tau + ops.diffusion @ w / self.peclet + ops.convection @ c - F1
        R2 = ops.mass @ w - self.nonlinear_vector(c) - self.gamma ** 2 * (ops.diffusion @ c) - F2
        if not self.mass_constraint:
            return np.concatenate([R1, R2])
        R1 = R1 + lam * ops.mass_vector
        R3 = ops.mass_vector @ c - self.mass_target
        return np.concatenate([R1, R2, [R3]])

    def jacobian(self, X: np.ndarray) -> sp.csr_matrix:
        """Jacobian of ``residual`` with respect to X."""
        ops = self.operators
        c, _, _ = self.split(X)
        top_left = ops.mass / self.tau + ops.convection
        top_right = ops.diffusion / self.peclet
        bottom_left = -(self.nonlinear_jacobian(c) + self.gamma ** 2 * ops.diffusion)
        if not self.mass_constraint:
            return sp.bmat([[top_left, top_right], [bottom_left, ops.mass]], format='csr')
        g = sp.csr_matrix(ops.mass_vector.reshape(-1, 1))
        return sp.bmat([
            [top_left, top_right, g],
            [bottom_left, ops.mass, None],
            [g.T, None, None],
        ], format='csr')

    # --- scalar functionals ----------------------------------------------

    def mass(self, c: np.ndarray) -> float:
        return float(self.operators.mass_vector @ c)
