"""
Unit tests for the diagnostics and convergence tables.
"""

import numpy as np
import pandas as pd
import pytest

from analytics.convergence import ConvergenceTable, estimate_order
from analytics.diagnostics import (DiagnosticsSeries, angular_displacement, compute_absolute_mass, compute_discrete_mass,
                                   compute_errors, compute_free_energy, field_extrema, max_gradient,
                                   phase_moment_angle)
from basis import element_quadrature
from hho.local_operators import make_cell_basis
from mesh import build_mesh, compute_geometry, generate_cartesian_mesh
from solver.assembly import build_discrete_operators
from solver.initial_condition import interpolate_field


def ones(x):
    return np.ones(len(x))


@pytest.fixture
def unit_operators():
    geometry = compute_geometry(build_mesh([(0, 0), (1, 0), (1, 1), (0, 1)], [(0, 1, 2, 3)]))
    return build_discrete_operators(geometry, 0)


def test_mass_of_simple_fields(operators_k0):
    assert compute_discrete_mass(interpolate_field(ones, operators_k0), operators_k0) == pytest.approx(1.0)
    odd = interpolate_field(lambda x: 2.0 * x[:, 0] - 1.0, operators_k0)
    assert compute_discrete_mass(odd, operators_k0) == pytest.approx(0.0, abs=1e-14)


def test_mass_matches_quadrature(operators_k0, rng):
    c = rng.standard_normal(operators_k0.n_dofs)
    oracle = 0.0
    for element in operators_k0.geometry.elements:
        rule = element_quadrature(element, 2)
        basis = make_cell_basis(element, 0)
        oracle += rule.integrate(basis.evaluate(c[operators_k0.dofmap.cell_dofs(element.index)], rule.points))
    assert compute_discrete_mass(c, operators_k0) == pytest.approx(oracle, rel=1e-12)


def test_free_energy(unit_operators):
    one = interpolate_field(ones, unit_operators)
    assert compute_free_energy(one, unit_operators, 1.0) == pytest.approx(0.0, abs=1e-14)
    assert compute_free_energy(np.zeros_like(one), unit_operators, 1.0) == pytest.approx(0.25)
    linear = interpolate_field(lambda x: x[:, 0], unit_operators)
    assert compute_free_energy(linear, unit_operators, 1.0) == pytest.approx(2.0 / 15.0 + 0.5, rel=1e-12)


def test_errors_of_interpolants(square_geometry):
    ops = build_discrete_operators(square_geometry, 1)
    c_exact = lambda x: x[:, 0] ** 2 + x[:, 1]
    w_exact = lambda x: 1.0 - x[:, 0] * x[:, 1]
    errors = compute_errors(interpolate_field(c_exact, ops), interpolate_field(w_exact, ops),
                            c_exact, w_exact, ops)
    for field in ("c", "w"):
        assert errors[field]["l2"] == pytest.approx(0.0, abs=1e-12)
        assert errors[field]["h1"] == pytest.approx(0.0, abs=1e-10)


def test_constant_offset_error(operators_k0):
    exact = lambda x: np.sin(x[:, 0])
    c = interpolate_field(exact, operators_k0) + 0.5 * interpolate_field(ones, operators_k0)
    errors = compute_errors(c, c, exact, exact, operators_k0)
    # P^1 projection error of sin(x) is small but not zero
    assert errors["c"]["l2"] == pytest.approx(0.5, abs=1e-2)
    assert errors["c"]["h1"] == pytest.approx(0.0, abs=1e-10)


def test_extrema_and_gradient(operators_k0):
    c = interpolate_field(lambda x: 2.0 * x[:, 0] - 1.0, operators_k0)
    lo, hi = field_extrema(c, operators_k0)
    assert -1.0 < lo < -0.5
    assert 0.5 < hi < 1.0
    assert max_gradient(c, operators_k0) == pytest.approx(2.0, rel=1e-12)


def test_phase_moment_angle():
    ops = build_discrete_operators(compute_geometry(generate_cartesian_mesh(8, 8)), 0)
    right = interpolate_field(lambda x: 2.0 * x[:, 0] - 1.0, ops)
    top = interpolate_field(lambda x: 2.0 * x[:, 1] - 1.0, ops)
    assert phase_moment_angle(right, ops) == pytest.approx(0.0, abs=1e-2)
    assert phase_moment_angle(top, ops) == pytest.approx(np.pi / 2, abs=1e-2)


def test_angular_displacement_wraps():
    assert angular_displacement(0.1, 2 * np.pi - 0.1) == pytest.approx(0.2)
    assert angular_displacement(-3.0, 3.0) == pytest.approx(2 * np.pi - 6.0)
    assert angular_displacement(np.pi, 0.0) == pytest.approx(np.pi)


def test_diagnostics_series():
    series = DiagnosticsSeries(conserves_mass=True)
    series.record(0.1, 1.0, 3.0, 2, 1e-12)
    series.record(0.2, 1.0 + 1e-13, 2.5, 1, 1e-13)
    series.record(0.3, 1.0, 2.6, 1, 1e-13)
    assert len(series) == 3
    assert series.mass_drift() == pytest.approx(1e-13, rel=1e-2)
    assert series.energy_increases() == [2]
    assert list(series.to_frame()["newton_iters"]) == [2, 1, 1]
    with pytest.raises(ValueError):
        series.record(0.3, 1.0, 2.0, 1, 0.0)


def test_mass_drift_is_relative_to_the_initial_datum():
    series = DiagnosticsSeries(conserves_mass=True, initial_mass=2e-3, mass_scale=0.5)
    series.record(0.1, 2e-3 + 1e-12, 0.0, 1, 0.0)
    series.record(0.2, 2e-3 - 4e-12, 0.0, 1, 0.0)
    assert series.mass_drift() == pytest.approx(8e-12, rel=1e-3)

    # the first recorded step is not the reference
    shifted = DiagnosticsSeries(initial_mass=1.0)
    shifted.record(0.1, 1.0 + 1e-9, 0.0, 1, 0.0)
    shifted.record(0.2, 1.0 + 1e-9, 0.0, 1, 0.0)
    assert shifted.mass_drift() == pytest.approx(1e-9, rel=1e-6)

    small = DiagnosticsSeries(initial_mass=0.01)
    small.record(0.1, 0.01 + 1e-6, 0.0, 1, 0.0)
    assert small.mass_drift() == pytest.approx(1e-4, rel=1e-6)

    assert DiagnosticsSeries(initial_mass=0.0, mass_scale=0.0).mass_reference() == {"initial_mass": 0.0,
                                                                                     "mass_scale": 0.0}


def test_absolute_mass(operators_k0):
    odd = interpolate_field(lambda x: 2.0 * x[:, 0] - 1.0, operators_k0)
    assert compute_absolute_mass(odd, operators_k0) == pytest.approx(0.5, rel=1e-12)
    assert compute_absolute_mass(-interpolate_field(ones, operators_k0), operators_k0) == pytest.approx(1.0)


def test_empty_series_frames():
    series = DiagnosticsSeries()
    assert series.mass_drift() == 0.0
    assert list(series.snapshot_frame().columns) == ["step", "time", "c_min", "c_max"]


def test_convergence_table(tmp_path):
    table = ConvergenceTable(["c_h1", "c_l2"])
    for h in (0.4, 0.2, 0.1):
        table.add(h, {"c_h1": h ** 2, "c_l2": 3.0 * h ** 3})
    assert table.order("c_h1") == pytest.approx(2.0)
    assert table.summary()["c_l2"] == pytest.approx(3.0)
    rates = table.pairwise_rates("c_h1")
    assert np.isnan(rates[0])
    np.testing.assert_allclose(rates[1:], 2.0)
    assert "c_h1" in str(table)

    frame = pd.read_csv(table.write_csv(str(tmp_path / "rates.csv")))
    assert list(frame.columns) == ["h", "c_h1", "c_h1_rate", "c_l2", "c_l2_rate"]
    assert len(frame) == 3

    with pytest.raises(ValueError):
        table.add(0.05, {"c_h1": 1.0})


def test_order_needs_two_meshes():
    table = ConvergenceTable(["e"])
    table.add(0.1, {"e": 0.01})
    assert np.isnan(table.order("e"))
    assert estimate_order([1.0, 0.5, 0.25], [1.0, 0.25, 0.0625]) == pytest.approx(2.0)
