"""
Convergence-rate tables for mesh refinement studies.

Each tracked quantity gets an ``EOCRecorder`` from pytools; the overall
rate is its least-squares slope of log(error) against log(h), the
per-row rates compare consecutive meshes.
"""

import logging
from typing import Dict, Iterable, List, Sequence

import numpy as np
import pandas as pd
from pytools.convergence import EOCRecorder

logger = logging.getLogger("hho_ch.analytics.convergence")


def estimate_order(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(h)."""
    recorder = EOCRecorder()
    for hi, ei in zip(h, errors):
        recorder.add_data_point(float(hi), float(ei))
    return float(recorder.order_estimate())


class ConvergenceTable:
    """
    Errors of several quantities recorded over a sequence of meshes.

    Args:
        quantities: Names of the tracked errors, e.g. ['c_h1', 'w_l2']
    """

    def __init__(self, quantities: Iterable[str]):
        self.quantities: List[str] = list(quantities)
        self.recorders: Dict[str, EOCRecorder] = {q: EOCRecorder() for q in self.quantities}
        self.h: List[float] = []
        self.errors: Dict[str, List[float]] = {q: [] for q in self.quantities}

    def add(self, h: float, errors: Dict[str, float]):
        missing = set(self.quantities) - set(errors)
        if missing:
            raise ValueError(f"missing errors for {sorted(missing)}")
        self.h.append(float(h))
        for q in self.quantities:
            self.errors[q].append(float(errors[q]))
            self.recorders[q].add_data_point(float(h), float(errors[q]))
        logger.info(f"h={h:.4e}: " + ", ".join(f"{q}={errors[q]:.4e}" for q in self.quantities))

    def __len__(self) -> int:
        return len(self.h)

    def order(self, quantity: str) -> float:
        """Least-squares rate of ``quantity`` over all recorded meshes."""
        if len(self) < 2:
            return float("nan")
        return float(self.recorders[quantity].order_estimate())

    def max_error(self, quantity: str) -> float:
        return float(max(self.errors[quantity]))

    def pairwise_rates(self, quantity: str) -> np.ndarray:
        """Rate between each mesh and the previous one (NaN for the first)."""
        h = np.asarray(self.h)
        e = np.asarray(self.errors[quantity])
        rates = np.full(len(h), np.nan)
        if len(h) > 1:
            with np.errstate(divide='ignore', invalid='ignore'):
                rates[1:] = np.log(e[1:] / e[:-1]) / np.log(h[1:] / h[:-1])
        return rates

    def to_frame(self) -> pd.DataFrame:
        """One row per mesh: h, then error and rate columns per quantity."""
        data = {"h": self.h}
        for q in self.quantities:
            data[q] = self.errors[q]
            data[f"{q}_rate"] = self.pairwise_rates(q)
        return pd.DataFrame(data)

    def summary(self) -> Dict[str, float]:
        return {q: self.order(q) for q in self.quantities}

    def write_csv(self, path: str) -> str:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        logger.info(f"Convergence table written to {path}")
        return path

    def __str__(self) -> str:
        return "\n".join(f"{q}:\n{self.recorders[q].pretty_print()}" for q in self.quantities)
