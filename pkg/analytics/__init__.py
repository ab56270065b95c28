"""
Analytics package for the HHO Cahn-Hilliard simulator.

This package contains the run diagnostics (mass, energy, errors, phase
moments) and the convergence-rate tables.
"""

from analytics.convergence import ConvergenceTable, estimate_order
from analytics.diagnostics import (DiagnosticsSeries, angular_displacement, compute_absolute_mass, compute_discrete_mass,
                                   compute_errors, compute_free_energy, field_extrema, max_gradient,
                                   phase_moment_angle)

__all__ = [
    'ConvergenceTable',
    'estimate_order',
    'DiagnosticsSeries',
    'angular_displacement',
    'compute_absolute_mass',
    'compute_discrete_mass',
    'compute_errors',
    'compute_free_energy',
    'field_extrema',
    'max_gradient',
    'phase_moment_angle',
]
