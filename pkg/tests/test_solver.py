"""
Unit tests for the coupled step system, static condensation and Newton.
"""

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import root
from scipy.sparse.linalg import spsolve

from mesh import build_mesh, compute_geometry, generate_cartesian_mesh
from scenarios.fields import cubic_vortex
from solver.assembly import build_discrete_operators
from solver.condensation import recover_cell_unknowns, static_condense
from solver.initial_condition import interpolate_field
from solver.newton import (MIN_STEP, NewtonConfig, SolverState, backtrack, newton_step, solve_linearized,
                           solve_time_step)
from solver.stepper import run_time_loop
from solver.system import (CahnHilliardSystem, double_well, double_well_derivative,
                           double_well_second_derivative)
from utils.errors import CondensationError, NewtonConvergenceError


@pytest.fixture
def vortex_operators(square_geometry):
    return build_discrete_operators(square_geometry, 0, cubic_vortex(2.0))


@pytest.fixture
def system(vortex_operators):
    return CahnHilliardSystem(vortex_operators, gamma=0.2, peclet=2.0, tau=1e-2)


@pytest.fixture
def unit_system():
    """Single unit square, k = 0, in the convex regime tau < 4 gamma^2 Pe."""
    geometry = compute_geometry(build_mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2, 3)]))
    ops = build_discrete_operators(geometry, 0)
    system = CahnHilliardSystem(ops, gamma=0.5, peclet=1.0, tau=0.1)
    c_old = interpolate_field(lambda x: 0.3 + 0.2 * x[:, 0] - 0.1 * x[:, 1], ops)
    system.mass_target = system.mass(c_old)
    return system, c_old


def random_state(operators, rng, amplitude=0.5):
    return amplitude * rng.standard_normal(operators.n_dofs)


def test_double_well():
    c = np.array([-1.0, 0.0, 0.5, 1.0])
    np.testing.assert_allclose(double_well(c), [0.0, 0.25, 0.25 * 0.75 ** 2, 0.0])
    np.testing.assert_allclose(double_well_derivative(c), [0.0, 0.0, -0.375, 0.0])
    np.testing.assert_allclose(double_well_second_derivative(c), [2.0, -1.0, -0.25, 2.0])


def test_system_rejects_non_positive_parameters(vortex_operators):
    with pytest.raises(ValueError):
        CahnHilliardSystem(vortex_operators, gamma=0.1, peclet=0.0, tau=1e-2)


def test_split_join(system, rng):
    c, w = rng.standard_normal(system.n), rng.standard_normal(system.n)
    X = system.join(c, w, 0.25)
    assert len(X) == system.size == 2 * system.n + 1
    c2, w2, lam = system.split(X)
    np.testing.assert_array_equal(c2, c)
    np.testing.assert_array_equal(w2, w)
    assert lam == 0.25


@pytest.mark.parametrize("k", [0, 1])
@pytest.mark.parametrize("mass_constraint", [True, False])
def test_jacobian_matches_finite_differences(square_geometry, rng, k, mass_constraint):
    ops = build_discrete_operators(square_geometry, k, cubic_vortex(2.0))
    system = CahnHilliardSystem(ops, gamma=0.2, peclet=2.0, tau=1e-2, mass_constraint=mass_constraint)
    c_old = random_state(ops, rng)
    step = 1e-6
    for _ in range(10):
        X = rng.standard_normal(system.size) * 0.5
        J = system.jacobian(X).toarray()
        fd = np.empty_like(J)
        for j in range(system.size):
            e = np.zeros(system.size)
            e[j] = step
            fd[:, j] = (system.residual(X + e, c_old) - system.residual(X - e, c_old)) / (2 * step)
        np.testing.assert_allclose(J, fd, atol=1e-6 * max(1.0, np.abs(J).max()))


def test_condensation_reduces_to_faces(system, rng):
    X = system.join(random_state(system.operators, rng), random_state(system.operators, rng))
    J = system.jacobian(X)
    rhs = rng.standard_normal(system.size)
    condensed = static_condense(J, rhs, system.operators.dofmap)
    assert condensed.n_reduced == 2 * system.operators.dofmap.n_face_dofs + 1
    x = recover_cell_unknowns(condensed, spsolve(condensed.matrix.tocsc(), condensed.rhs))
    np.testing.assert_allclose(x, spsolve(J.tocsc(), rhs), rtol=1e-9, atol=1e-10)


def test_condensed_and_full_newton_agree(system, rng):
    c_old = random_state(system.operators, rng)
    system.mass_target = system.mass(c_old)
    X_full = X_cond = system.join(c_old, np.zeros(system.n))
    for _ in range(3):
        X_full, _ = newton_step(system, X_full, c_old, NewtonConfig(condensation=False, line_search=False))
        X_cond, _ = newton_step(system, X_cond, c_old, NewtonConfig(condensation=True, line_search=False))
        np.testing.assert_allclose(X_cond, X_full, atol=1e-10)


@pytest.mark.parametrize("k", [0, 1])
def test_condensed_and_full_time_loops_agree(k):
    ops = build_discrete_operators(compute_geometry(generate_cartesian_mesh(4, 4)), k, cubic_vortex(2.0))
    system = CahnHilliardSystem(ops, gamma=0.2, peclet=2.0, tau=1e-2)
    c0 = interpolate_field(lambda x: 0.3 * np.sin(2 * np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]), ops)
    finals = {}
    for condensation in (True, False):
        config = NewtonConfig(tolerance=1e-12, condensation=condensation)
        result = run_time_loop(system, c0, 5e-2, config)
        assert result.n_steps == 5
        finals[condensation] = result.final_state
    np.testing.assert_allclose(finals[True].c, finals[False].c, atol=1e-10)
    np.testing.assert_allclose(finals[True].w, finals[False].w, atol=1e-10)


class ScalarResidual:
    """One-unknown residual for exercising the damping rule."""

    def __init__(self, func):
        self.func = func

    def residual(self, X, c_old, time=None):
        return self.func(X)


def test_backtracking_halves_an_overshooting_step():
    # Newton on arctan from x = 2 overshoots to -3.54
    system = ScalarResidual(np.arctan)
    X = np.array([2.0])
    dX = -np.arctan(X) * (1.0 + X ** 2)
    X_new, alpha = backtrack(system, X, dX, None, None, float(np.abs(np.arctan(X)).max()))
    assert alpha == 0.5
    np.testing.assert_allclose(X_new, X + 0.5 * dX)
    assert abs(np.arctan(X_new[0])) < abs(np.arctan(2.0))


def test_backtracking_keeps_full_newton_steps():
    system = ScalarResidual(np.arctan)
    X = np.array([0.1])
    dX = -np.arctan(X) * (1.0 + X ** 2)
    X_new, alpha = backtrack(system, X, dX, None, None, float(np.abs(np.arctan(X)).max()))
    assert alpha == 1.0
    np.testing.assert_array_equal(X_new, X + dX)


def test_backtracking_without_decrease_takes_the_smallest_residual():
    system = ScalarResidual(lambda X: np.exp(np.abs(X)))
    X_new, alpha = backtrack(system, np.zeros(1), np.ones(1), None, None, 1.0)
    assert alpha == MIN_STEP
    np.testing.assert_allclose(X_new, [MIN_STEP])


def test_line_search_keeps_full_steps_on_a_mild_step(unit_system):
    system, c_old = unit_system
    X_plain = X_damped = system.join(c_old, np.zeros_like(c_old))
    for _ in range(2):
        X_plain, _ = newton_step(system, X_plain, c_old, NewtonConfig(line_search=False))
        X_damped, _ = newton_step(system, X_damped, c_old, NewtonConfig())
        np.testing.assert_array_equal(X_damped, X_plain)


def test_condensation_detects_cross_element_coupling(system, rng):
    X = system.join(random_state(system.operators, rng), np.zeros(system.n))
    J = system.jacobian(X).tolil()
    J[0, system.operators.dofmap.cell_dofs(1)[0]] = 1.0
    with pytest.raises(CondensationError) as excinfo:
        static_condense(J.tocsr(), np.zeros(system.size), system.operators.dofmap)
    assert excinfo.value.element == 0


def test_condensation_detects_singular_block(operators_k0):
    size = 2 * operators_k0.n_dofs + 1
    with pytest.raises(CondensationError):
        static_condense(sp.csr_matrix((size, size)), np.zeros(size), operators_k0.dofmap)


def test_gmres_matches_direct(system, rng):
    X = system.join(random_state(system.operators, rng), np.zeros(system.n))
    J = system.jacobian(X)
    rhs = rng.standard_normal(system.size)
    direct = solve_linearized(J, rhs, system.operators.dofmap, NewtonConfig())
    iterative = solve_linearized(J, rhs, system.operators.dofmap, NewtonConfig(linear_solver="gmres"))
    np.testing.assert_allclose(iterative, direct, rtol=1e-7, atol=1e-8)


def test_flat_state_is_a_fixed_point(operators_k0):
    system = CahnHilliardSystem(operators_k0, gamma=0.1, peclet=1.0, tau=1e-2)
    zero = np.zeros(operators_k0.n_dofs)
    assert np.abs(system.residual(system.join(zero, zero), zero)).max() == 0.0
    state = solve_time_step(system, SolverState(0, 0.0, zero, zero), NewtonConfig())
    assert state.newton_iterations[-1] <= 1
    np.testing.assert_array_equal(state.c, 0.0)
    np.testing.assert_array_equal(state.w, 0.0)


def test_pure_phase_is_stationary(operators_k0):
    system = CahnHilliardSystem(operators_k0, gamma=0.1, peclet=1.0, tau=1e-2)
    one = interpolate_field(lambda x: np.ones(len(x)), operators_k0)
    system.mass_target = system.mass(one)
    zero = np.zeros_like(one)
    assert np.abs(system.residual(system.join(one, zero), one)).max() < 1e-12
    state = solve_time_step(system, SolverState(0, 0.0, one, zero), NewtonConfig())
    np.testing.assert_allclose(state.c, one, atol=1e-12)
    assert system.mass(state.c) == pytest.approx(1.0, abs=1e-13)


def test_newton_matches_dense_root_finder(unit_system):
    system, c_old = unit_system
    state = solve_time_step(system, SolverState(0, 0.0, c_old, np.zeros_like(c_old)),
                            NewtonConfig(tolerance=1e-13))

    X0 = system.join(c_old, np.zeros_like(c_old))
    oracle = root(lambda X: system.residual(X, c_old), X0,
                  jac=lambda X: system.jacobian(X).toarray(), method="hybr", options={"xtol": 1e-13})
    assert np.abs(system.residual(oracle.x, c_old)).max() < 1e-12
    c, w, lam = system.split(oracle.x)
    np.testing.assert_allclose(state.c, c, atol=1e-10)
    np.testing.assert_allclose(state.w, w, atol=1e-10)
    assert state.lam == pytest.approx(lam, abs=1e-10)


def test_newton_iterates_match_dense_updates(unit_system):
    system, c_old = unit_system
    X = system.join(c_old, np.zeros_like(c_old))
    for _ in range(4):
        R = system.residual(X, c_old)
        dense = X - np.linalg.solve(system.jacobian(X).toarray(), R)
        X, _ = newton_step(system, X, c_old, NewtonConfig(line_search=False))
        np.testing.assert_allclose(X, dense, atol=1e-10)


def test_mass_is_conserved_without_constraint(vortex_operators, rng):
    system = CahnHilliardSystem(vortex_operators, gamma=0.2, peclet=2.0, tau=1e-2, mass_constraint=False)
    c0 = interpolate_field(lambda x: 0.4 * np.cos(3 * x[:, 0]) * x[:, 1], vortex_operators)
    state = solve_time_step(system, SolverState(0, 0.0, c0, np.zeros_like(c0)), NewtonConfig(tolerance=1e-13))
    assert system.mass(state.c) == pytest.approx(system.mass(c0), abs=1e-11)


def test_non_convergence_carries_history(operators_k0, rng):
    system = CahnHilliardSystem(operators_k0, gamma=0.1, peclet=1.0, tau=1.0, mass_constraint=False)
    c_old = 0.8 * rng.standard_normal(operators_k0.n_dofs)
    config = NewtonConfig(tolerance=1e-14, max_iterations=1)
    with pytest.raises(NewtonConvergenceError) as excinfo:
        solve_time_step(system, SolverState(0, 0.0, c_old, np.zeros_like(c_old)), config)
    assert excinfo.value.step == 1
    assert len(excinfo.value.history) == 2


@pytest.mark.parametrize("kwargs", [
    {"tolerance": 0.0},
    {"max_iterations": 0},
    {"linear_solver": "cg"},
    {"linear_tolerance": -1.0},
])
def test_newton_config_validation(kwargs):
    with pytest.raises(ValueError):
        NewtonConfig(**kwargs)
