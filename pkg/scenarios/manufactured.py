"""
Manufactured solutions and mesh-refinement studies.

An ExactSolution (c, w) of the convective Cahn-Hilliard equations with
right-hand sides is turned into load vectors for both discrete equations:

    F1 = (f_c, v_T) + 1/Pe sum_{F on boundary} (grad w . n, v_F)_F
    F2 = (f_w, v_T) - gamma^2 sum_{F on boundary} (grad c . n, v_F)_F

with f_c = d_t c - lap w / Pe + u . grad c and f_w = w - Phi'(c) + gamma^2 lap c.
The boundary sums account for non-zero normal derivatives of the exact
fields.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from analytics.convergence import ConvergenceTable
from analytics.diagnostics import compute_errors
from hho.local_operators import OperatorOptions
from hho.velocity import VelocityField, zero_velocity
from mesh.core import compute_geometry
from solver.assembly import build_discrete_operators
from solver.initial_condition import boundary_flux_vector, cell_load_vector, solve_initial_condition
from solver.newton import NewtonConfig
from solver.stepper import run_time_loop
from solver.system import CahnHilliardSystem, double_well_derivative

logger = logging.getLogger("hho_ch.scenarios.manufactured")

SpaceTimeField = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """Space-time fields of an exact (c, w) pair; every callable takes (points, t)."""
    name: str
    c: SpaceTimeField
    grad_c: SpaceTimeField
    lap_c: SpaceTimeField
    dt_c: SpaceTimeField
    w: SpaceTimeField
    grad_w: SpaceTimeField
    lap_w: SpaceTimeField

    def at(self, t: float, name: str) -> Callable[[np.ndarray], np.ndarray]:
        fn = getattr(self, name)
        return lambda x: fn(np.asarray(x, dtype=float).reshape(-1, 2), t)


def polynomial_solution(c_coefficients: np.ndarray, w_coefficients: np.ndarray) -> ExactSolution:
    """
    c(x, t) = (1 + t) p(x), w(x, t) = (1 + t) q(x).

    Coefficient matrices follow numpy's polyval2d convention: C[i, j]
    multiplies x^i y^j.
    """
    Cc = np.asarray(c_coefficients, dtype=float)
    Cw = np.asarray(w_coefficients, dtype=float)

    def value(C):
        return lambda x, t: (1.0 + t) * P.polyval2d(x[:, 0], x[:, 1], C)

    def grad(C):
        Cx, Cy = P.polyder(C, axis=0), P.polyder(C, axis=1)
        return lambda x, t: (1.0 + t) * np.column_stack((P.polyval2d(x[:, 0], x[:, 1], Cx),
                                                         P.polyval2d(x[:, 0], x[:, 1], Cy)))

    def lap(C):
        L = _pad(P.polyder(C, m=2, axis=0), C.shape) + _pad(P.polyder(C, m=2, axis=1), C.shape)
        return lambda x, t: (1.0 + t) * P.polyval2d(x[:, 0], x[:, 1], L)

    return ExactSolution(
        name="polynomial",
        c=value(Cc), grad_c=grad(Cc), lap_c=lap(Cc),
        dt_c=lambda x, t: P.polyval2d(x[:, 0], x[:, 1], Cc),
        w=value(Cw), grad_w=grad(Cw), lap_w=lap(Cw),
    )


def _pad(C: np.ndarray, shape) -> np.ndarray:
    out = np.zeros(shape)
    out[: C.shape[0], : C.shape[1]] = C
    return out


def default_polynomial_solution(k: int, c_degree: Optional[int] = None) -> ExactSolution:
    """Exact pair with c of degree ``c_degree`` (k by default) and w of degree k + 1, values of order 0.5."""
    def coefficients(degree):
        C = np.zeros((degree + 1, degree + 1))
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                C[i, j] = 0.3 * (-1.0) ** (i + j) / (1.0 + i + 2.0 * j)
        return C
    return polynomial_solution(coefficients(k if c_degree is None else c_degree), coefficients(k + 1))


def trigonometric_solution(amplitude: float = 0.5, decay: float = 1.0) -> ExactSolution:
    """c = w = a exp(-decay t) cos(pi x) cos(pi y); both have zero normal derivative on the unit square."""
    pi = np.pi

    def c(x, t):
        return amplitude * np.exp(-decay * t) * np.cos(pi * x[:, 0]) * np.cos(pi * x[:, 1])

    def grad(x, t):
        s = amplitude * np.exp(-decay * t) * pi
        return np.column_stack((-s * np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1]),
                                -s * np.cos(pi * x[:, 0]) * np.sin(pi * x[:, 1])))

    def lap(x, t):
        return -2.0 * pi ** 2 * c(x, t)

    return ExactSolution(
        name="trigonometric",
        c=c, grad_c=grad, lap_c=lap, dt_c=lambda x, t: -decay * c(x, t),
        w=c, grad_w=grad, lap_w=lap,
    )


def make_load_function(exact: ExactSolution, operators, gamma: float, peclet: float,
                       velocity: Optional[VelocityField] = None):
    """
    Callable t -> (F1, F2) injecting the manufactured sources.

    Cell loads use quadrature exact to degree 4(k+1) + 2 so that the cubic
    nonlinearity of polynomial solutions is integrated exactly.
    """
    velocity = velocity or zero_velocity()
    exactness = 4 * (operators.k + 1) + 2 + (velocity.extra_degree if not velocity.is_zero else 0)

    def loads(t: float):
        def f_c(x):
            return (exact.dt_c(x, t) - exact.lap_w(x, t) / peclet
                    + np.einsum('qd,qd->q', velocity(x), exact.grad_c(x, t)))

        def f_w(x):
            return exact.w(x, t) - double_well_derivative(exact.c(x, t)) + gamma ** 2 * exact.lap_c(x, t)

        F1 = cell_load_vector(f_c, operators, exactness) + boundary_flux_vector(exact.at(t, "grad_w"), operators) / peclet
        F2 = cell_load_vector(f_w, operators, exactness) - gamma ** 2 * boundary_flux_vector(exact.at(t, "grad_c"), operators)
        return F1, F2

    return loads


@dataclass
class ManufacturedRun:
    h: float
    tau: float
    errors: dict
    newton_iterations: List[int]


def run_manufactured(mesh, k: int, exact: ExactSolution, velocity: Optional[VelocityField] = None,
                     gamma: float = 1.0, peclet: float = 1.0, tau: float = 1e-2, n_steps: int = 1,
                     options: Optional[OperatorOptions] = None,
                     newton: Optional[NewtonConfig] = None) -> ManufacturedRun:
    """
    Solve the manufactured problem on one mesh and measure the final errors.

    The initial condition is the elliptic projection of c(., 0) with its
    boundary flux; the mass constraint is off since the sources change
    the mass.
    """
    geometry = compute_geometry(mesh)
    operators = build_discrete_operators(geometry, k, velocity, options)
    newton = newton or NewtonConfig(mass_constraint=False)
    system = CahnHilliardSystem(operators, gamma, peclet, tau, mass_constraint=newton.mass_constraint,
                                loads=make_load_function(exact, operators, gamma, peclet, velocity))
    c0 = solve_initial_condition(exact.at(0.0, "c"), exact.at(0.0, "lap_c"), operators,
                                 gradient_c0=exact.at(0.0, "grad_c"))
    result = run_time_loop(system, c0, n_steps * tau, newton)
    state = result.final_state
    errors = compute_errors(state.c, state.w, exact.at(state.time, "c"), exact.at(state.time, "w"), operators)
    return ManufacturedRun(h=geometry.h, tau=tau, errors=errors, newton_iterations=state.newton_iterations)


def manufactured_convergence_study(k: int, meshes: Sequence, exact: Optional[ExactSolution] = None,
                                   velocity: Optional[VelocityField] = None, gamma: float = 1.0,
                                   peclet: float = 1.0, tau_factor: float = 0.1, n_steps: int = 2,
                                   options: Optional[OperatorOptions] = None) -> ConvergenceTable:
    """
    Errors and observed rates over a mesh sequence with tau = tau_factor h^(k+1).

    Args:
        k: Face degree
        meshes: Meshes from coarse to fine
        exact: ExactSolution (trigonometric by default)
        velocity: Advecting field (zero by default)
        gamma: Interface parameter
        peclet: Peclet number
        tau_factor: Time step over h^(k+1)
        n_steps: Steps per run

    Returns:
        ConvergenceTable with c_l2, c_h1, w_l2, w_h1
    """
    exact = exact or trigonometric_solution()
    table = ConvergenceTable(["c_l2", "c_h1", "w_l2", "w_h1"])
    for mesh in meshes:
        h = compute_geometry(mesh).h
        run = run_manufactured(mesh, k, exact, velocity, gamma, peclet, tau_factor * h ** (k + 1), n_steps, options)
        table.add(run.h, {f"{field}_{norm}": run.errors[field][norm] for field in ("c", "w") for norm in ("l2", "h1")})
    logger.info(f"Observed rates (k={k}): " + ", ".join(f"{q}={r:.2f}" for q, r in table.summary().items()))
    return table
