"""
Tests for the command line interface.
"""

import os

import pandas as pd
import pytest
from typer.testing import CliRunner

from cli.main import app

runner = CliRunner()

SMALL_RUN = """\
physics:
  gamma: 0.3
  peclet: 1.0
time:
  tau: 1.0e-2
  t_final: 2.0e-2
mesh:
  generator: cartesian
  nx: 3
  ny: 3
velocity:
  name: cubic-vortex
  params:
    amplitude: 2.0
initial_condition:
  name: tanh-profile
output:
  snapshot_times: [0.0, 2.0e-2]
  formats: [vtk, csv]
"""


@pytest.fixture
def log_args(tmp_path):
    return ["--log-level", "WARNING", "--log-file", str(tmp_path / "cli.log")]


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.yml"
    path.write_text(SMALL_RUN)
    return str(path)


def test_validate_mesh(mesh_dir, log_args):
    path = os.path.join(mesh_dir, "two_squares.fvca")
    result = runner.invoke(app, log_args + ["validate-mesh", path])
    assert result.exit_code == 0
    assert "admissible, 6 vertices, 2 elements, 7 faces" in result.output


def test_validate_broken_mesh(tmp_path, log_args):
    path = tmp_path / "broken.fvca"
    path.write_text("VERTICES 3\n0 0\n1 x\n0 1\nELEMENTS 1\n3 0 1 2\n")
    result = runner.invoke(app, log_args + ["validate-mesh", str(path)])
    assert result.exit_code == 1
    assert "broken.fvca:3" in result.output


def test_run_writes_outputs(small_config, tmp_path, log_args):
    out = tmp_path / "run"
    result = runner.invoke(app, log_args + ["run", small_config, "--output", str(out)])
    assert result.exit_code == 0, result.output
    assert "Finished 2 steps" in result.output
    for name in ("snapshot_000000.vtk", "snapshot_000002.vtk", "timeseries.csv", "snapshots.json",
                 "manifest.json"):
        assert (out / name).exists()
    assert len(pd.read_csv(out / "timeseries.csv")) == 2


def test_run_rejects_invalid_config(small_config, log_args):
    result = runner.invoke(app, log_args + ["run", small_config, "--set", "physics.peclet=0"])
    assert result.exit_code == 1
    assert "Pe must be positive" in result.output


def test_unknown_preset(log_args):
    result = runner.invoke(app, log_args + ["preset", "rayleigh-taylor"])
    assert result.exit_code == 1
    assert "not found" in result.output


def test_list_presets(log_args):
    result = runner.invoke(app, log_args + ["list-presets"])
    assert result.exit_code == 0
    for name in ("steady-disturbance", "thin-interface", "peclet-sweep", "spinodal"):
        assert name in result.output


def test_convergence_command(small_config, tmp_path, log_args):
    output = tmp_path / "rates.csv"
    result = runner.invoke(app, log_args + ["convergence", small_config, "--set", "velocity.name=zero",
                                            "--set", "velocity.params={}",
                                            "--levels", "2,4", "--steps", "1",
                                            "--output", str(output)])
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(output)
    assert list(frame["h"]) == pytest.approx([2 ** 0.5 / 2, 2 ** 0.5 / 4])
    assert "c_h1_rate" in frame.columns


def test_preset_reports_sweep(mocker, log_args):
    from analytics.diagnostics import DiagnosticsSeries
    from scenarios.runner import SweepMember

    members = {pe: SweepMember(pe, DiagnosticsSeries(), [(0.0, 0.0), (0.06, 0.01 * pe)], None) for pe in (1.0, 50.0)}
    run_case = mocker.patch("scenarios.run_test_case", return_value=members)
    result = runner.invoke(app, log_args + ["preset", "peclet-sweep", "--jobs", "2", "--set", "mesh.nx=4"])
    assert result.exit_code == 0, result.output
    assert "Pe = 50: +0.5000 rad at t = 0.06" in result.output
    run_case.assert_called_once_with("peclet-sweep", ["mesh.nx=4"], scale="desk", output_dir=None, n_jobs=2)
