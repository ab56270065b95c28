"""
Newton iteration for one backward Euler step.

Each iteration solves J dX = -R either on the full system or on the
statically condensed face system. The stopping test is
||R||_inf <= tolerance * (1 + ||R_0||_inf) with R_0 the residual at the
initial guess (the previous time level).

Updates are damped by backtracking on the Euclidean residual norm: the
step X + alpha dX is accepted once it lowers ||R||_2 by the Armijo factor,
halving alpha down to MIN_STEP. When no trial step decreases the residual
the trial with the smallest residual is taken.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, spilu, spsolve

from solver.condensation import recover_cell_unknowns, static_condense
from utils.errors import NewtonConvergenceError

logger = logging.getLogger("hho_ch.solver.newton")

LINEAR_SOLVERS = ("direct", "gmres")

ARMIJO = 1e-4
MIN_STEP = 2.0 ** -6


@dataclass(frozen=True)
class NewtonConfig:
    """Stopping criteria and linear algebra options of the Newton solver."""
    tolerance: float = 1e-10
    max_iterations: int = 25
    condensation: bool = True
    linear_solver: str = "direct"
    linear_tolerance: float = 1e-12
    mass_constraint: bool = True
    line_search: bool = True

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("newton tolerance must be positive")
        if self.linear_tolerance <= 0:
            raise ValueError("linear solver tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ValueError(f"linear_solver must be one of {LINEAR_SOLVERS}")


@dataclass
class SolverState:
    """Discrete state at time level ``step``."""
    step: int
    time: float
    c: np.ndarray
    w: np.ndarray
    lam: float = 0.0
    residual_history: List[List[float]] = field(default_factory=list)
    newton_iterations: List[int] = field(default_factory=list)

    def copy(self) -> "SolverState":
        return replace(self, c=self.c.copy(), w=self.w.copy(),
                       residual_history=[list(h) for h in self.residual_history],
                       newton_iterations=list(self.newton_iterations))


def _solve_sparse(matrix: sp.csr_matrix, rhs: np.ndarray, config: NewtonConfig) -> np.ndarray:
    if config.linear_solver == "gmres":
        ilu = spilu(matrix.tocsc())
        preconditioner = LinearOperator(matrix.shape, ilu.solve)
        x, info = gmres(matrix, rhs, rtol=config.linear_tolerance, atol=0.0, M=preconditioner,
                        restart=200, maxiter=50)
        if info != 0:
            raise NewtonConvergenceError(f"GMRES did not converge (info={info})")
    else:
        x = spsolve(matrix.tocsc(), rhs)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise NewtonConvergenceError("linear solve produced non-finite values (singular Jacobian?)")
    return x


def solve_linearized(matrix: sp.spmatrix, rhs: np.ndarray, dofmap, config: NewtonConfig,
                     n_extra: int = 1) -> np.ndarray:
    """Solve one linearised system, condensing the cell unknowns if configured."""
    if not config.condensation:
        return _solve_sparse(sp.csr_matrix(matrix), rhs, config)
    condensed = static_condense(matrix, rhs, dofmap, n_fields=2, n_extra=n_extra)
    return recover_cell_unknowns(condensed, _solve_sparse(condensed.matrix, condensed.rhs, config))


def newton_step(system, X: np.ndarray, c_old: np.ndarray, config: NewtonConfig,
                time: Optional[float] = None) -> Tuple[np.ndarray, float]:
    """
    One Newton update of the coupled residual.

    Args:
        system: CahnHilliardSystem
        X: Current iterate [c, w, lam]
        c_old: Order parameter at the previous time level
        config: NewtonConfig
        time: Time of the new level

    Returns:
        Tuple (updated iterate, residual inf-norm at ``X``)
    """
    R = system.residual(X, c_old, time)
    J = system.jacobian(X)
    n_extra = 1 if system.mass_constraint else 0
    dX = solve_linearized(J, -R, system.operators.dofmap, config, n_extra=n_extra)
    if not config.line_search:
        return X + dX, float(np.abs(R).max())
    X_new, alpha = backtrack(system, X, dX, c_old, time, float(np.linalg.norm(R)))
    if alpha < 1.0:
        logger.debug(f"Newton update damped to alpha={alpha:g}")
    return X_new, float(np.abs(R).max())


def backtrack(system, X: np.ndarray, dX: np.ndarray, c_old: np.ndarray, time: Optional[float],
              norm: float) -> Tuple[np.ndarray, float]:
    """
    Damped update X + alpha dX with alpha in {1, 1/2, ..., MIN_STEP}.

    Returns:
        Tuple (accepted iterate, alpha)
    """
    alpha = 1.0
    best, best_alpha, best_norm = None, 1.0, np.inf
    while alpha >= MIN_STEP:
        trial = X + alpha * dX
        trial_norm = float(np.linalg.norm(system.residual(trial, c_old, time)))
        if np.isfinite(trial_norm) and trial_norm <= (1.0 - ARMIJO * alpha) * norm:
            return trial, alpha
        if trial_norm < best_norm:
            best, best_alpha, best_norm = trial, alpha, trial_norm
        alpha *= 0.5
    if best is None:
        return X + dX, 1.0
    return best, best_alpha


def solve_time_step(system, state: SolverState, config: NewtonConfig,
                    time: Optional[float] = None) -> SolverState:
    """
    Advance ``state`` by one step of size system.tau.

    The initial guess is the previous time level.

    Raises:
        NewtonConvergenceError: tolerance not reached within max_iterations;
            carries the residual history of the step
    """
    new_time = state.time + system.tau if time is None else time
    X = system.join(state.c, state.w, state.lam)
    history: List[float] = []
    iterations = 0
    while True:
        R = system.residual(X, state.c, new_time)
        norm = float(np.abs(R).max())
        history.append(norm)
        if not np.isfinite(norm):
            raise NewtonConvergenceError("residual is not finite", history=history, step=state.step + 1)
        if norm <= config.tolerance * (1.0 + history[0]):
            break
        if iterations >= config.max_iterations:
            raise NewtonConvergenceError(
                f"no convergence in {config.max_iterations} iterations (residual {norm:.3e})",
                history=history, step=state.step + 1)
        X, _ = newton_step(system, X, state.c, config, new_time)
        iterations += 1
        logger.debug(f"step {state.step + 1} iteration {iterations}: residual {norm:.3e}")

    c, w, lam = system.split(X)
    logger.debug(f"step {state.step + 1} converged in {iterations} iterations (residual {history[-1]:.3e})")
    return SolverState(
        step=state.step + 1,
        time=new_time,
        c=c.copy(),
        w=w.copy(),
        lam=lam,
        residual_history=state.residual_history + [history],
        newton_iterations=state.newton_iterations + [iterations],
    )
