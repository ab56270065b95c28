"""
Diagnostics of discrete order-parameter and chemical-potential fields.

This module computes:
- Total mass and free energy
- L2 and discrete H1 errors against exact fields
- Extrema and gradient sup over quadrature points
- The angle of the first circular moment of the phase pattern
and records them per time step in a DiagnosticsSeries.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from basis.projection import PROJECTION_BUMP
from basis.quadrature import element_quadrature
from hho.local_operators import make_cell_basis
from solver.initial_condition import interpolate_field
from solver.system import double_well

logger = logging.getLogger("hho_ch.analytics.diagnostics")

TIMESERIES_COLUMNS = ["time", "mass", "energy", "newton_iters", "residual"]
SNAPSHOT_COLUMNS = ["step", "time", "c_min", "c_max"]

Field = Callable[[np.ndarray], np.ndarray]


@dataclass
class DiagnosticsSeries:
    """Per-step scalar diagnostics and per-snapshot extrema.

    ``initial_mass`` is the mass of c_h^0 and ``mass_scale`` the integral of
    |c_h^0|; mass_drift is measured against them when they are set.
    """
    rows: List[Dict[str, float]] = field(default_factory=list)
    snapshots: List[Dict[str, float]] = field(default_factory=list)
    conserves_mass: bool = False
    initial_mass: Optional[float] = None
    mass_scale: Optional[float] = None

    def record(self, time: float, mass: float, energy: float, newton_iters: int, residual: float):
        if self.rows and time <= self.rows[-1]["time"]:
            raise ValueError(f"diagnostic times must increase: {time} after {self.rows[-1]['time']}")
        self.rows.append({
            "time": float(time),
            "mass": float(mass),
            "energy": float(energy),
            "newton_iters": int(newton_iters),
            "residual": float(residual),
        })

    def record_snapshot(self, step: int, time: float, c_min: float, c_max: float):
        self.snapshots.append({"step": int(step), "time": float(time), "c_min": float(c_min), "c_max": float(c_max)})

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=TIMESERIES_COLUMNS)

    def snapshot_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.snapshots, columns=SNAPSHOT_COLUMNS)

    def mass_drift(self) -> float:
        """
        Largest deviation of the mass from the initial mass, relative to
        max(|initial mass|, mass_scale).

        Without an initial mass the first row is the reference. A zero
        scale falls back to an absolute drift.
        """
        if not self.rows:
            return 0.0
        mass = self.column("mass")
        reference = mass[0] if self.initial_mass is None else self.initial_mass
        scale = max(abs(reference), self.mass_scale or 0.0)
        if scale == 0.0:
            scale = 1.0
        return float(np.abs(mass - reference).max() / scale)

    def mass_reference(self) -> Dict[str, float]:
        return {"initial_mass": self.initial_mass, "mass_scale": self.mass_scale}

    def energy_increases(self, tolerance: float = 1e-8) -> List[int]:
        """Indices of rows where the energy grew by more than ``tolerance``."""
        energy = self.column("energy")
        return [i + 1 for i in np.flatnonzero(np.diff(energy) > tolerance)]


def compute_discrete_mass(c: np.ndarray, operators) -> float:
    """
    Integral of the cell polynomials of ``c`` over the domain.

    Args:
        c: Hybrid vector
        operators: DiscreteOperators

    Returns:
        float: Total mass
    """
    return float(operators.mass_vector @ np.asarray(c))


def compute_absolute_mass(c: np.ndarray, operators) -> float:
    """Integral of |c_T| with the nonlinear quadrature."""
    c = np.asarray(c)
    total = 0.0
    for e, loc in enumerate(operators.locals):
        values = loc.nonlinear_phi @ c[operators.dofmap.cell_dofs(e)]
        total += float(loc.nonlinear_rule.weights @ np.abs(values))
    return total


def compute_free_energy(c: np.ndarray, operators, gamma: float) -> float:
    """
    Discrete free energy E_h = int Phi(c_T) + gamma^2 / 2 a_h(c, c).

    The bulk term uses the nonlinear quadrature of the local operators
    (exact to degree 4(k+1) by default).
    """
    c = np.asarray(c)
    bulk = 0.0
    for e, loc in enumerate(operators.locals):
        values = loc.nonlinear_phi @ c[operators.dofmap.cell_dofs(e)]
        bulk += float(loc.nonlinear_rule.weights @ double_well(values))
    return bulk + 0.5 * gamma ** 2 * float(c @ (operators.diffusion @ c))


def _l2_error(u: np.ndarray, exact: Field, operators, exactness: int) -> float:
    total = 0.0
    for element in operators.geometry.elements:
        rule = element_quadrature(element, exactness)
        basis = make_cell_basis(element, operators.k, operators.options)
        diff = basis.evaluate(u[operators.dofmap.cell_dofs(element.index)], rule.points) - exact(rule.points)
        total += float(rule.weights @ diff ** 2)
    return float(np.sqrt(total))


def energy_seminorm(v: np.ndarray, operators) -> float:
    """sqrt(a_h(v, v)), clipped at zero against round-off."""
    return float(np.sqrt(max(0.0, float(v @ (operators.diffusion @ v)))))


def compute_errors(c: np.ndarray, w: np.ndarray, exact_c: Field, exact_w: Field, operators,
                   exactness: Optional[int] = None) -> Dict[str, Dict[str, float]]:
    """
    L2 and discrete H1 errors of both fields.

    The L2 error compares the cell polynomials with the exact field; the
    discrete H1 error is the a_h seminorm of (numerical - interpolant).

    Returns:
        dict: {'c': {'l2', 'h1'}, 'w': {'l2', 'h1'}}
    """
    order = exactness if exactness is not None else 2 * (operators.k + 1) + PROJECTION_BUMP
    out = {}
    for name, u, exact in (("c", c, exact_c), ("w", w, exact_w)):
        u = np.asarray(u, dtype=float)
        interp = interpolate_field(exact, operators)
        out[name] = {
            "l2": _l2_error(u, exact, operators, order),
            "h1": energy_seminorm(u - interp, operators),
        }
    return out


def _sample(c: np.ndarray, operators, gradients: bool = False):
    for e, loc in enumerate(operators.locals):
        coeffs = np.asarray(c)[operators.dofmap.cell_dofs(e)]
        if not gradients:
            yield e, loc.nonlinear_phi @ coeffs
        else:
            element = operators.geometry.element(e)
            basis = make_cell_basis(element, operators.k, operators.options)
            yield e, np.einsum('qjd,j->qd', basis.gradients(loc.nonlinear_rule.points), coeffs)


def field_extrema(c: np.ndarray, operators) -> Tuple[float, float]:
    """Min and max of the cell polynomials over the quadrature points."""
    lo, hi = np.inf, -np.inf
    for _, values in _sample(c, operators):
        lo = min(lo, float(values.min()))
        hi = max(hi, float(values.max()))
    return lo, hi


def max_gradient(c: np.ndarray, operators) -> float:
    """Sup of |grad c_T| over the quadrature points of every element."""
    worst = 0.0
    for _, grads in _sample(c, operators, gradients=True):
        worst = max(worst, float(np.linalg.norm(grads, axis=1).max()))
    return worst


def phase_moment_angle(c: np.ndarray, operators, center=(0.5, 0.5)) -> float:
    """
    Argument of the first circular moment of (1 + c) / 2 about ``center``.

    The moment is int (1 + c)/2 exp(i theta) with theta the polar angle
    about ``center``; its argument tracks how far the phase pattern has
    turned.
    """
    center = np.asarray(center, dtype=float)
    moment = 0.0 + 0.0j
    for e, values in _sample(c, operators):
        rule = operators.locals[e].nonlinear_rule
        rel = rule.points - center
        theta = np.arctan2(rel[:, 1], rel[:, 0])
        moment += complex(rule.weights @ (0.5 * (1.0 + values) * np.exp(1j * theta)))
    return float(np.angle(moment))


def angular_displacement(angle: float, reference: float) -> float:
    """Difference of two angles wrapped to (-pi, pi]."""
    delta = (angle - reference + np.pi) % (2.0 * np.pi) - np.pi
    return float(np.pi if delta == -np.pi else delta)
