"""
Command Line Interface for the HHO Cahn-Hilliard simulator.

Commands:
    run <config>             run a YAML configuration file
    preset <name>            run one of the reference test cases
    convergence <config>     manufactured-solution rates on refined meshes
    validate-mesh <file>     check a fvca-poly mesh file
"""

import os
import sys
from typing import List, Optional

import typer

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import list_presets, parse_config
from utils.errors import HHOError
from utils.logger import setup_logging

app = typer.Typer(help="Hybrid high-order simulator for the convective Cahn-Hilliard problem")


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, help="Logging level (default from config.json)"),
         log_file: Optional[str] = typer.Option(None, help="Also log to this file")):
    setup_logging(log_level, log_file)


def _fail(error: Exception):
    typer.echo(f"Error: {error}", err=True)
    raise typer.Exit(1)


def _report_run(outcome):
    diagnostics = outcome.diagnostics
    state = outcome.result.final_state
    typer.echo(f"Finished {outcome.result.n_steps} steps, t = {state.time:g}")
    if len(diagnostics.rows):
        typer.echo(f"Mass drift: {diagnostics.mass_drift():.3e}")
        typer.echo(f"Final free energy: {diagnostics.column('energy')[-1]:.6e}")
    if outcome.run_dir:
        typer.echo(f"Outputs written to {outcome.run_dir}")


@app.command()
def run(
    config_file: str = typer.Argument(..., help="YAML configuration file"),
    set_: List[str] = typer.Option([], "--set", help="Override as section.key=value"),
    resume: Optional[str] = typer.Option(None, help="Checkpoint file to resume from"),
    output: Optional[str] = typer.Option(None, help="Run directory"),
):
    """Run a simulation described by a configuration file."""
    from scenarios.runner import run_peclet_sweep, run_simulation

    try:
        config = parse_config(config_file, set_)
        if config.sweep_peclet:
            members = run_peclet_sweep(config, n_jobs=config.n_jobs, output_dir=output)
            _report_sweep(members)
        else:
            _report_run(run_simulation(config, output_dir=output, resume_path=resume))
    except HHOError as e:
        _fail(e)


def _report_sweep(members):
    typer.echo("Peclet sweep (angular displacement of the phase pattern):")
    for pe in sorted(members):
        member = members[pe]
        final = member.rotation[-1] if member.rotation else (float("nan"), float("nan"))
        typer.echo(f"Pe = {pe:g}: {final[1]:+.4f} rad at t = {final[0]:g}")


@app.command()
def preset(
    name: str = typer.Argument(..., help="Preset name"),
    set_: List[str] = typer.Option([], "--set", help="Override as section.key=value"),
    scale: str = typer.Option("desk", help="'desk' or 'full' resolution"),
    output: Optional[str] = typer.Option(None, help="Run directory"),
    jobs: int = typer.Option(1, help="Worker processes of a Peclet sweep"),
):
    """Run a reference test case."""
    from scenarios import run_test_case

    if name not in list_presets():
        typer.echo(f"Error: preset '{name}' not found")
        typer.echo(f"Available presets: {', '.join(list_presets())}")
        raise typer.Exit(1)
    try:
        result = run_test_case(name, set_, scale=scale, output_dir=output, n_jobs=jobs)
    except (HHOError, ValueError) as e:
        _fail(e)
    if isinstance(result, dict):
        _report_sweep(result)
    else:
        _report_run(result)


@app.command()
def convergence(
    config_file: str = typer.Argument(..., help="YAML configuration (physics, k, mesh generator, velocity)"),
    set_: List[str] = typer.Option([], "--set", help="Override as section.key=value"),
    levels: str = typer.Option("8,16,32", help="Comma-separated mesh resolutions"),
    tau_factor: float = typer.Option(0.1, help="Time step over h^(k+1)"),
    steps: int = typer.Option(2, help="Time steps per mesh"),
    output: str = typer.Option("convergence.csv", help="Rate table CSV"),
):
    """Manufactured-solution errors and observed rates on a mesh sequence."""
    from hho.local_operators import OperatorOptions
    from mesh import get_mesh_generator
    from scenarios.fields import build_velocity
    from scenarios.manufactured import manufactured_convergence_study

    try:
        config = parse_config(config_file, set_)
        resolutions = [int(n) for n in levels.split(",") if n.strip()]
        generator = get_mesh_generator(config.mesh.generator)
        meshes = [generator(n, n, config.mesh.domain) for n in resolutions]
        options = OperatorOptions(upwind_projection=config.upwind_projection, orthonormalize=config.orthonormalize)
        table = manufactured_convergence_study(
            config.k, meshes, velocity=build_velocity(config.velocity), gamma=config.gamma,
            peclet=config.peclet, tau_factor=tau_factor, n_steps=steps, options=options)
        table.write_csv(output)
    except (HHOError, ValueError) as e:
        _fail(e)
    typer.echo(str(table))
    typer.echo(f"Rate table written to {output}")


@app.command("validate-mesh")
def validate_mesh_file(path: str = typer.Argument(..., help="Mesh file in fvca-poly format")):
    """Check that a mesh file is an admissible polygonal mesh."""
    from mesh import compute_geometry, read_polygonal_mesh, validate_mesh

    try:
        mesh = read_polygonal_mesh(path)
        report = validate_mesh(mesh)
        if not report.is_admissible:
            typer.echo(f"Error: {path}: {report.summary()}", err=True)
            raise typer.Exit(1)
        geometry = compute_geometry(mesh)
    except HHOError as e:
        _fail(e)
    typer.echo(f"{path}: admissible, {mesh.n_vertices} vertices, {mesh.n_elements} elements, "
               f"{mesh.n_faces} faces, h = {geometry.h:.4e}")


@app.command("list-presets")
def list_presets_command():
    """List the reference test cases."""
    from scenarios import SCENARIOS

    typer.echo("Available presets:")
    for name in list_presets():
        typer.echo(f"- {name}: {SCENARIOS.get(name, '')}")


if __name__ == "__main__":
    app()
