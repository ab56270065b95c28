"""
CSV outputs: per-step diagnostics, snapshot extrema and the snapshot sidecar.

CSV files use ',' as separator, '.' as decimal point and %.17g for floats.
"""

import json
import logging
import os
from typing import List

import pandas as pd

from analytics.diagnostics import DiagnosticsSeries, TIMESERIES_COLUMNS
from utils.errors import OutputError

logger = logging.getLogger("hho_ch.writers.timeseries")

FLOAT_FORMAT = "%.17g"


def _to_csv(df: pd.DataFrame, path: str):
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"cannot write CSV: {e}", path=path)


def write_timeseries_csv(diagnostics: DiagnosticsSeries, path: str) -> str:
    """
    Write one row per accepted step under the header
    time,mass,energy,newton_iters,residual.
    """
    df = diagnostics.to_frame()
    if df.empty:
        df = pd.DataFrame(columns=TIMESERIES_COLUMNS)
    _to_csv(df, path)
    logger.info(f"Time series ({len(df)} steps) written to {path}")
    return path


def write_snapshot_table(diagnostics: DiagnosticsSeries, path: str) -> str:
    """Step, time and extrema of c_h at every snapshot."""
    _to_csv(diagnostics.snapshot_frame(), path)
    return path


def write_snapshot_sidecar(diagnostics: DiagnosticsSeries, files: List[str], path: str) -> str:
    """
    JSON list describing every snapshot file.

    Schema: [{"step": int, "time": float, "c_min": float, "c_max": float, "file": str}, ...]
    """
    entries = []
    for snap, file in zip(diagnostics.snapshots, files):
        entry = dict(snap)
        entry["file"] = os.path.basename(file)
        entries.append(entry)
    try:
        with open(path, 'w') as f:
            json.dump(entries, f, indent=2)
    except OSError as e:
        raise OutputError(f"cannot write snapshot sidecar: {e}", path=path)
    return path
