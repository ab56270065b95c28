"""
End-to-end simulation runs.

run_simulation turns a SimulationConfig into a mesh, operators, discrete
initial data and a time loop, and writes the requested outputs into a run
directory. run_peclet_sweep repeats one configuration for several Peclet
numbers in parallel worker processes.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from analytics.diagnostics import DiagnosticsSeries, angular_displacement, phase_moment_angle
from config import REPO_ROOT, SimulationConfig, config_hash, output_root
from hho.local_operators import OperatorOptions
from mesh import compute_geometry, get_mesh_generator, read_polygonal_mesh, validate_mesh
from scenarios.fields import build_initial_datum, build_velocity
from solver.assembly import build_discrete_operators
from solver.checkpoint import load_checkpoint
from solver.initial_condition import solve_initial_condition
from solver.stepper import TimeLoopResult, run_time_loop
from solver.system import CahnHilliardSystem
from utils.errors import MeshError
from writers.manifest import build_manifest, run_directory, write_manifest
from writers.timeseries import write_snapshot_sidecar, write_snapshot_table, write_timeseries_csv
from writers.vtk import write_vtk_fine_snapshot, write_vtk_snapshot

logger = logging.getLogger("hho_ch.scenarios.runner")


@dataclass
class RunOutcome:
    config: SimulationConfig
    result: TimeLoopResult
    operators: object
    run_dir: Optional[str] = None
    files: List[str] = field(default_factory=list)
    rotation: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def diagnostics(self) -> DiagnosticsSeries:
        return self.result.diagnostics


@dataclass
class SweepMember:
    """Picklable summary of one run of a sweep."""
    peclet: float
    diagnostics: DiagnosticsSeries
    rotation: List[Tuple[float, float]]
    run_dir: Optional[str]

    def displacement_at(self, time: float, tol: float = 1e-12) -> float:
        for t, angle in self.rotation:
            if abs(t - time) <= tol + 1e-9 * abs(time):
                return angle
        raise KeyError(f"no snapshot at t={time}")


def resolve_mesh_path(path: str) -> str:
    """Relative mesh files are looked up in the working directory, then in the repository."""
    if os.path.isabs(path) or os.path.exists(path):
        return path
    candidate = os.path.join(REPO_ROOT, path)
    return candidate if os.path.exists(candidate) else path


def build_mesh(spec):
    """Mesh from a MeshSpec: a fvca-poly file or a named generator."""
    if spec.file:
        return read_polygonal_mesh(resolve_mesh_path(spec.file))
    return get_mesh_generator(spec.generator)(spec.nx, spec.ny, spec.domain)


def rotation_series(snapshots, operators, center=(0.5, 0.5)) -> List[Tuple[float, float]]:
    """Angular displacement of the phase pattern at each snapshot relative to the first one."""
    if not snapshots:
        return []
    reference = phase_moment_angle(snapshots[0].c, operators, center)
    out = []
    for state in snapshots:
        angle = phase_moment_angle(state.c, operators, center)
        out.append((state.time, angular_displacement(angle, reference)))
    return out


def discrete_initial_condition(config: SimulationConfig, datum, operators) -> np.ndarray:
    """c_h^0 of a run; the boundary flux of c0 enters only with ``initial_flux``."""
    gradient = datum.gradient if config.initial_flux else None
    return solve_initial_condition(datum.value, datum.laplacian, operators, gradient_c0=gradient,
                                   interface_width=datum.width, projection=config.initial_projection)


def run_simulation(config: SimulationConfig, output_dir: Optional[str] = None,
                   resume_path: Optional[str] = None, write_outputs: bool = True) -> RunOutcome:
    """
    Run one configuration from mesh generation to output files.

    Args:
        config: Resolved SimulationConfig
        output_dir: Run directory (default <output root>/<preset>-<config hash>)
        resume_path: Checkpoint to continue from
        write_outputs: Write VTK/CSV/manifest files

    Returns:
        RunOutcome
    """
    mesh = build_mesh(config.mesh)
    report = validate_mesh(mesh)
    if not report.is_admissible:
        raise MeshError(f"mesh is not admissible: {report.summary()}")
    geometry = compute_geometry(mesh)

    velocity = build_velocity(config.velocity)
    velocity.check(geometry)
    options = OperatorOptions(upwind_projection=config.upwind_projection, orthonormalize=config.orthonormalize)
    operators = build_discrete_operators(geometry, config.k, velocity, options, n_jobs=config.n_jobs)

    datum = build_initial_datum(config.initial_condition, geometry, config.gamma)
    c0 = discrete_initial_condition(config, datum, operators)
    system = CahnHilliardSystem(operators, config.gamma, config.peclet, config.tau,
                                mass_constraint=config.newton.mass_constraint)

    run_dir = None
    files: List[str] = []
    if write_outputs:
        run_dir = output_dir or run_directory(config, output_root())
        os.makedirs(run_dir, exist_ok=True)
    fmt = config.output.formats

    def on_snapshot(state):
        if run_dir is None or "vtk" not in fmt:
            return
        files.append(write_vtk_snapshot(state, operators, os.path.join(run_dir, f"snapshot_{state.step:06d}.vtk")))
        if config.output.fine_vtk:
            write_vtk_fine_snapshot(state, operators, os.path.join(run_dir, f"snapshot_{state.step:06d}_fine.vtk"))

    resume = None
    if resume_path:
        resume = load_checkpoint(resume_path, n_dofs=operators.n_dofs, config_hash=config_hash(config))
    checkpoint_path = os.path.join(run_dir, "checkpoint.pkl") if run_dir and config.output.checkpoint_every else None

    logger.info(f"Running {config.preset or 'custom'} ({config.scale}): gamma={config.gamma:g} Pe={config.peclet:g} "
                f"tau={config.tau:g} t_final={config.t_final:g} k={config.k} elements={mesh.n_elements}")
    result = run_time_loop(
        system, c0, config.t_final, config.newton,
        output_times=config.output.snapshot_times,
        on_snapshot=on_snapshot,
        resume=resume,
        checkpoint_path=checkpoint_path,
        checkpoint_every=config.output.checkpoint_every,
        rng_state=datum.rng_state,
        config_hash=config_hash(config),
        conserves_mass=velocity.no_penetration,
        check_energy=velocity.is_zero,
    )
    outcome = RunOutcome(config=config, result=result, operators=operators, run_dir=run_dir, files=files,
                         rotation=rotation_series(result.snapshots, operators))

    if run_dir is not None:
        if "csv" in fmt:
            files.append(write_timeseries_csv(result.diagnostics, os.path.join(run_dir, "timeseries.csv")))
            files.append(write_snapshot_table(result.diagnostics, os.path.join(run_dir, "snapshots.csv")))
        vtk_files = [f for f in files if f.endswith(".vtk")]
        if vtk_files:
            files.append(write_snapshot_sidecar(result.diagnostics, vtk_files, os.path.join(run_dir, "snapshots.json")))
        manifest = build_manifest(config, mesh.provenance)
        manifest.outputs = [os.path.basename(f) for f in files]
        files.append(write_manifest(manifest, run_dir))
    return outcome


def _sweep_member(config: SimulationConfig, output_dir: Optional[str], write_outputs: bool) -> SweepMember:
    outcome = run_simulation(config, output_dir=output_dir, write_outputs=write_outputs)
    return SweepMember(peclet=config.peclet, diagnostics=outcome.diagnostics,
                       rotation=outcome.rotation, run_dir=outcome.run_dir)


def run_peclet_sweep(config: SimulationConfig, peclets: Optional[Sequence[float]] = None, n_jobs: int = 1,
                     output_dir: Optional[str] = None, write_outputs: bool = True) -> Dict[float, SweepMember]:
    """
    Run ``config`` once per Peclet number with identical initial data.

    Args:
        config: Base configuration (its seed is shared by every run)
        peclets: Peclet numbers (config.sweep_peclet by default)
        n_jobs: Worker processes
        output_dir: Parent directory; each run gets a pe-<value> subdirectory

    Returns:
        dict: Peclet number -> SweepMember
    """
    peclets = tuple(peclets or config.sweep_peclet or (config.peclet,))
    configs = [replace(config, peclet=float(pe)) for pe in peclets]
    dirs = [os.path.join(output_dir, f"pe-{pe:g}") if output_dir else None for pe in peclets]
    logger.info(f"Peclet sweep over {peclets} with {n_jobs} worker(s)")
    members = Parallel(n_jobs=n_jobs)(
        delayed(_sweep_member)(cfg, d, write_outputs) for cfg, d in zip(configs, dirs)
    )
    return {m.peclet: m for m in members}
