"""
Backward Euler time loop.

Each step solves the coupled (c, w) problem with Newton starting from the
previous level, records mass, free energy and solver statistics, and
hands the states that fall on requested output times to a callback.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from analytics.diagnostics import DiagnosticsSeries, compute_absolute_mass, compute_free_energy, field_extrema
from solver.checkpoint import Checkpoint, save_checkpoint
from solver.newton import NewtonConfig, SolverState, solve_time_step
from utils.errors import NewtonConvergenceError

logger = logging.getLogger("hho_ch.solver.stepper")

ENERGY_TOLERANCE = 1e-8


def number_of_steps(t_final: float, tau: float) -> int:
    """Number of steps of size tau to reach t_final; warns when tau does not divide it."""
    if tau <= 0 or t_final < tau:
        raise ValueError(f"need 0 < tau <= t_final (tau={tau}, t_final={t_final})")
    ratio = t_final / tau
    n = max(1, int(round(ratio)))
    if abs(n - ratio) > 1e-9 * ratio:
        logger.warning(f"tau={tau} does not divide t_final={t_final}; running {n} steps to t={n * tau:.6g}")
    return n


@dataclass
class TimeLoopResult:
    final_state: SolverState
    snapshots: List[SolverState] = field(default_factory=list)
    diagnostics: DiagnosticsSeries = field(default_factory=DiagnosticsSeries)

    @property
    def n_steps(self) -> int:
        return self.final_state.step


def _is_output_step(time: float, output_times: Optional[Sequence[float]], tau: float, is_last: bool) -> bool:
    if output_times is None:
        return is_last
    return any(abs(time - t) <= 0.5 * tau for t in output_times)


def run_time_loop(system, c0: np.ndarray, t_final: float, newton_config: NewtonConfig = NewtonConfig(),
                  output_times: Optional[Sequence[float]] = None,
                  on_snapshot: Optional[Callable[[SolverState], None]] = None,
                  w0: Optional[np.ndarray] = None,
                  resume: Optional[Checkpoint] = None,
                  checkpoint_path: Optional[str] = None,
                  checkpoint_every: int = 0,
                  rng_state=None,
                  config_hash: Optional[str] = None,
                  conserves_mass: bool = False,
                  check_energy: bool = False) -> TimeLoopResult:
    """
    Integrate from c0 up to t_final with steps of system.tau.

    Args:
        system: CahnHilliardSystem
        c0: Discrete initial order parameter
        t_final: Final time
        newton_config: NewtonConfig
        output_times: Times at which states are kept and passed to
            ``on_snapshot`` (final state only when None)
        on_snapshot: Callback receiving each output state
        w0: Initial guess of the chemical potential (zero by default)
        resume: Checkpoint to continue from instead of c0
        checkpoint_path: File rewritten every ``checkpoint_every`` steps
        checkpoint_every: Checkpoint period in steps (0 disables)
        rng_state: Generator state stored in checkpoints
        config_hash: Configuration hash stored in checkpoints
        conserves_mass: Flag the series as mass conserving (u.n = 0)
        check_energy: Warn when the free energy grows (meaningful for u = 0)

    Returns:
        TimeLoopResult

    Raises:
        NewtonConvergenceError: a step failed; the error carries its residual history
    """
    n_steps = number_of_steps(t_final, system.tau)
    diagnostics = DiagnosticsSeries(conserves_mass=conserves_mass)

    if resume is not None:
        state = resume.state.copy()
        diagnostics.rows = [dict(r) for r in resume.diagnostics]
        reference = resume.mass_reference or {}
        diagnostics.initial_mass = reference.get("initial_mass")
        diagnostics.mass_scale = reference.get("mass_scale")
        logger.info(f"Resuming at step {state.step} (t={state.time:.6g})")
    else:
        c0 = np.asarray(c0, dtype=float)
        w_init = np.zeros_like(c0) if w0 is None else np.asarray(w0, dtype=float)
        state = SolverState(step=0, time=0.0, c=c0.copy(), w=w_init.copy())
    if diagnostics.initial_mass is None:
        diagnostics.initial_mass = system.mass(state.c)
        diagnostics.mass_scale = compute_absolute_mass(state.c, system.operators)
    system.mass_target = diagnostics.initial_mass

    result = TimeLoopResult(final_state=state, diagnostics=diagnostics)
    if state.step == 0 and output_times is not None and _is_output_step(0.0, output_times, system.tau, False):
        lo, hi = field_extrema(state.c, system.operators)
        diagnostics.record_snapshot(0, 0.0, lo, hi)
        result.snapshots.append(state.copy())
        if on_snapshot is not None:
            on_snapshot(state)

    logger.info(f"Time loop: {n_steps} steps of tau={system.tau:g} (starting at step {state.step})")
    previous_energy = compute_free_energy(state.c, system.operators, system.gamma)
    while state.step < n_steps:
        time = (state.step + 1) * system.tau
        try:
            state = solve_time_step(system, state, newton_config, time=time)
        except NewtonConvergenceError as e:
            logger.error(f"Step {e.step} failed: {e} (residuals: {', '.join(f'{r:.2e}' for r in e.history)})")
            raise

        energy = compute_free_energy(state.c, system.operators, system.gamma)
        diagnostics.record(state.time, system.mass(state.c), energy,
                           state.newton_iterations[-1], state.residual_history[-1][-1])
        if check_energy and energy - previous_energy > ENERGY_TOLERANCE:
            logger.warning(f"Free energy increased at step {state.step}: {previous_energy:.10e} -> {energy:.10e}")
        previous_energy = energy
        logger.debug(f"step {state.step}: t={state.time:.6g} mass={diagnostics.rows[-1]['mass']:.12e} energy={energy:.6e}")

        if _is_output_step(state.time, output_times, system.tau, state.step == n_steps):
            lo, hi = field_extrema(state.c, system.operators)
            diagnostics.record_snapshot(state.step, state.time, lo, hi)
            result.snapshots.append(state.copy())
            if on_snapshot is not None:
                on_snapshot(state)

        if checkpoint_path and checkpoint_every and state.step % checkpoint_every == 0:
            save_checkpoint(checkpoint_path, state, rng_state, diagnostics.rows, config_hash,
                            mass_reference=diagnostics.mass_reference())

    result.final_state = state
    if conserves_mass:
        logger.info(f"Relative mass drift over the run: {diagnostics.mass_drift():.3e}")
    logger.info(f"Time loop finished at t={state.time:.6g} after {state.step} steps")
    return result
