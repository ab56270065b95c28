"""
Unit tests for the time loop and checkpoints.
"""

import logging

import joblib
import numpy as np
import pytest

from mesh import compute_geometry, generate_cartesian_mesh
from scenarios.fields import cubic_vortex
from analytics.diagnostics import compute_absolute_mass, compute_free_energy
from solver.assembly import build_discrete_operators
from solver.checkpoint import load_checkpoint, save_checkpoint
from solver.initial_condition import interpolate_field
from solver.newton import NewtonConfig, SolverState
from solver.stepper import number_of_steps, run_time_loop
from solver.system import CahnHilliardSystem
from utils.errors import CheckpointError
from writers.vtk import cell_means

TAU = 1e-2


def wavy(x):
    return 0.3 * np.sin(2.0 * np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1])


@pytest.fixture
def vortex_system(square_geometry):
    ops = build_discrete_operators(square_geometry, 0, cubic_vortex(2.0))
    return CahnHilliardSystem(ops, gamma=0.2, peclet=2.0, tau=TAU)


def test_number_of_steps(caplog):
    assert number_of_steps(1.0, 0.25) == 4
    with caplog.at_level(logging.WARNING):
        assert number_of_steps(1.0, 0.3) == 3
    assert "does not divide" in caplog.text
    with pytest.raises(ValueError):
        number_of_steps(0.1, 0.2)


def test_pure_phase_stays_put(operators_k0):
    system = CahnHilliardSystem(operators_k0, gamma=0.1, peclet=1.0, tau=TAU)
    one = interpolate_field(lambda x: np.ones(len(x)), operators_k0)
    result = run_time_loop(system, one, 3 * TAU)
    assert result.n_steps == 3
    np.testing.assert_allclose(result.final_state.c, one, atol=1e-12)
    np.testing.assert_allclose(result.diagnostics.column("mass"), 1.0, atol=1e-12)
    np.testing.assert_array_equal(result.diagnostics.column("newton_iters"), 0)


def test_diagnostics_and_snapshots(vortex_system):
    c0 = interpolate_field(wavy, vortex_system.operators)
    seen = []
    result = run_time_loop(vortex_system, c0, 4 * TAU, output_times=[0.0, 2 * TAU],
                           on_snapshot=lambda s: seen.append(s.step), conserves_mass=True)

    frame = result.diagnostics.to_frame()
    assert list(frame.columns) == ["time", "mass", "energy", "newton_iters", "residual"]
    np.testing.assert_allclose(frame["time"], [TAU, 2 * TAU, 3 * TAU, 4 * TAU])
    assert result.diagnostics.mass_drift() < 1e-10
    assert seen == [0, 2]
    assert [s.step for s in result.snapshots] == [0, 2]
    assert len(result.diagnostics.snapshots) == 2
    np.testing.assert_array_equal(result.snapshots[0].c, c0)
    assert result.diagnostics.initial_mass == pytest.approx(vortex_system.mass(c0), abs=1e-15)
    assert result.diagnostics.mass_scale == pytest.approx(compute_absolute_mass(c0, vortex_system.operators))


def test_final_state_is_the_default_snapshot(vortex_system):
    c0 = interpolate_field(wavy, vortex_system.operators)
    result = run_time_loop(vortex_system, c0, 2 * TAU)
    assert [s.step for s in result.snapshots] == [2]


def test_resume_matches_uninterrupted_run(vortex_system, tmp_path):
    c0 = interpolate_field(wavy, vortex_system.operators)
    path = str(tmp_path / "checkpoint.pkl")
    full = run_time_loop(vortex_system, c0, 4 * TAU)

    run_time_loop(vortex_system, c0, 2 * TAU, checkpoint_path=path, checkpoint_every=2, config_hash="abc")
    checkpoint = load_checkpoint(path, n_dofs=vortex_system.n, config_hash="abc")
    assert checkpoint.state.step == 2
    assert len(checkpoint.diagnostics) == 2
    assert checkpoint.mass_reference["initial_mass"] == pytest.approx(full.diagnostics.initial_mass, abs=1e-15)

    resumed = run_time_loop(vortex_system, None, 4 * TAU, resume=checkpoint)
    assert resumed.n_steps == 4
    np.testing.assert_allclose(resumed.final_state.c, full.final_state.c, atol=1e-10)
    np.testing.assert_allclose(resumed.diagnostics.column("mass"), full.diagnostics.column("mass"), atol=1e-12)
    assert resumed.diagnostics.initial_mass == full.diagnostics.initial_mass
    assert resumed.diagnostics.mass_drift() == pytest.approx(full.diagnostics.mass_drift(), abs=1e-12)


def test_checkpoint_errors(tmp_path):
    state = SolverState(3, 0.03, np.zeros(5), np.ones(5), lam=0.5, newton_iterations=[1, 2, 1])
    path = save_checkpoint(str(tmp_path / "ck.pkl"), state, {"seed": 7}, [], "abc")

    loaded = load_checkpoint(path, n_dofs=5, config_hash="abc")
    assert loaded.state.step == 3
    assert loaded.state.lam == 0.5
    assert loaded.rng_state == {"seed": 7}

    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(str(tmp_path / "missing.pkl"))
    with pytest.raises(CheckpointError, match="expected 6"):
        load_checkpoint(path, n_dofs=6)
    with pytest.raises(CheckpointError, match="different configuration"):
        load_checkpoint(path, config_hash="def")

    joblib.dump({"format_version": 99}, str(tmp_path / "old.pkl"))
    with pytest.raises(CheckpointError, match="unsupported"):
        load_checkpoint(str(tmp_path / "old.pkl"))
    (tmp_path / "garbage.pkl").write_text("not a pickle")
    with pytest.raises(CheckpointError, match="cannot read"):
        load_checkpoint(str(tmp_path / "garbage.pkl"))


def test_mirrored_problem_gives_mirrored_solution():
    geometry = compute_geometry(generate_cartesian_mesh(4, 4))
    u = cubic_vortex(3.0)
    config = NewtonConfig(tolerance=1e-12)
    finals = []
    for velocity, datum in ((u, lambda x: 0.6 * x[:, 0] - 0.3 + 0.2 * x[:, 1]),
                            (u.reversed(), lambda x: 0.3 - 0.6 * x[:, 0] + 0.2 * x[:, 1])):
        ops = build_discrete_operators(geometry, 0, velocity)
        system = CahnHilliardSystem(ops, gamma=0.2, peclet=1.0, tau=TAU)
        result = run_time_loop(system, interpolate_field(datum, ops), 3 * TAU, config)
        finals.append(cell_means(result.final_state.c, ops))

    centroids = geometry.element_centroid
    for e, (x, y) in enumerate(centroids):
        mirror = int(np.argmin(np.linalg.norm(centroids - [1.0 - x, y], axis=1)))
        assert finals[1][mirror] == pytest.approx(finals[0][e], abs=1e-8)


def test_free_energy_decays_without_flow():
    ops = build_discrete_operators(compute_geometry(generate_cartesian_mesh(4, 4)), 0)
    system = CahnHilliardSystem(ops, gamma=0.1, peclet=1.0, tau=1e-3)
    c0 = interpolate_field(lambda x: 0.1 * np.cos(2 * np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]), ops)
    result = run_time_loop(system, c0, 5e-3, check_energy=True)
    assert result.diagnostics.energy_increases() == []
    assert result.diagnostics.column("energy")[-1] <= compute_free_energy(c0, ops, system.gamma)
    assert result.diagnostics.column("energy")[-1] == compute_free_energy(result.final_state.c, ops, system.gamma)
    assert not hasattr(system, "free_energy")
