"""
Checkpoint files for resuming long time loops.

A checkpoint is a joblib pickle of a plain dict holding the format
version, the step index and time, the hybrid vectors c and w, the mass
multiplier, the random generator state, the diagnostics recorded so far and
the mass reference of the initial datum.
"""

import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import joblib
import numpy as np

from solver.newton import SolverState
from utils.errors import CheckpointError

logger = logging.getLogger("hho_ch.solver.checkpoint")

CHECKPOINT_FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    state: SolverState
    n_dofs: int
    rng_state: Optional[Dict[str, Any]] = None
    diagnostics: List[Dict[str, float]] = field(default_factory=list)
    config_hash: Optional[str] = None
    mass_reference: Optional[Dict[str, float]] = None


def save_checkpoint(path: str, state: SolverState, rng_state: Optional[Dict[str, Any]] = None,
                    diagnostics: Optional[List[Dict[str, float]]] = None,
                    config_hash: Optional[str] = None,
                    mass_reference: Optional[Dict[str, float]] = None) -> str:
    """
    Write ``state`` to ``path``.

    Args:
        path: Target file
        state: SolverState to persist
        rng_state: bit_generator.state of the run's generator
        diagnostics: Diagnostic rows recorded up to this step
        config_hash: Hash of the resolved configuration
        mass_reference: initial_mass and mass_scale of the run's DiagnosticsSeries

    Returns:
        str: Path written
    """
    payload = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "step": int(state.step),
        "time": float(state.time),
        "c": np.asarray(state.c, dtype=float),
        "w": np.asarray(state.w, dtype=float),
        "lam": float(state.lam),
        "newton_iterations": list(state.newton_iterations),
        "rng_state": rng_state,
        "diagnostics": list(diagnostics or []),
        "config_hash": config_hash,
        "mass_reference": dict(mass_reference) if mass_reference else None,
    }
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        joblib.dump(payload, path)
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint: {e}", path=path)
    logger.info(f"Checkpoint at step {state.step} (t={state.time:.6g}) saved to {path}")
    return path


def load_checkpoint(path: str, n_dofs: Optional[int] = None, config_hash: Optional[str] = None) -> Checkpoint:
    """
    Read a checkpoint and check it fits the current discretisation.

    Raises:
        CheckpointError: unreadable file, unknown format version, vector
            sizes or configuration hash that do not match
    """
    if not os.path.exists(path):
        raise CheckpointError("checkpoint file not found", path=path)
    try:
        payload = joblib.load(path)
    except Exception as e:
        raise CheckpointError(f"cannot read checkpoint: {e}", path=path)
    if not isinstance(payload, dict) or payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError("unsupported checkpoint format", path=path)

    c = np.asarray(payload["c"], dtype=float)
    w = np.asarray(payload["w"], dtype=float)
    if c.shape != w.shape:
        raise CheckpointError("c and w have different sizes", path=path)
    if n_dofs is not None and len(c) != n_dofs:
        raise CheckpointError(f"checkpoint has {len(c)} unknowns per field, expected {n_dofs}", path=path)
    if config_hash is not None and payload.get("config_hash") not in (None, config_hash):
        raise CheckpointError("checkpoint was written by a different configuration", path=path)

    state = SolverState(
        step=int(payload["step"]),
        time=float(payload["time"]),
        c=c,
        w=w,
        lam=float(payload["lam"]),
        residual_history=[[] for _ in payload.get("newton_iterations", [])],
        newton_iterations=list(payload.get("newton_iterations", [])),
    )
    return Checkpoint(state=state, n_dofs=len(c), rng_state=payload.get("rng_state"),
                      diagnostics=list(payload.get("diagnostics", [])),
                      config_hash=payload.get("config_hash"),
                      mass_reference=payload.get("mass_reference"))
