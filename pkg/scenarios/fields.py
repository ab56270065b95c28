"""
Velocity fields and initial data of the scenarios.

Velocities (all divergence free, u.n = 0 on the unit square):
- cubic-vortex:  a (x(x-1)(2y-1), -y(y-1)(2x-1))
- disc-rotation: (1 + tanh(b0 - b1 |x - (1/2, 1/2)|)) / 2 * (2y - 1, 1 - 2x)
- cellular-flow: (sin(pi x) cos(pi y), -cos(pi x) sin(pi y))

Initial data:
- constant:       c0 = value
- tanh-profile:   c0 = tanh((2x - 1) / (2 sqrt(2) gamma^2)), with Laplacian
- random-circle:  uniform in [-1, 1] on elements whose centroid lies in the
                  disc, -1 elsewhere
- random-uniform: mean + amplitude * uniform[-1, 1] on every element
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from hho.velocity import VelocityField, constant_velocity, zero_velocity

logger = logging.getLogger("hho_ch.scenarios.fields")

Field = Callable[[np.ndarray], np.ndarray]


# --- velocities ------------------------------------------------------------

def cubic_vortex(amplitude: float = 20.0) -> VelocityField:
    def u(x):
        X, Y = x[:, 0], x[:, 1]
        return amplitude * np.column_stack((X * (X - 1.0) * (2.0 * Y - 1.0), -Y * (Y - 1.0) * (2.0 * X - 1.0)))
    return VelocityField("cubic-vortex", u, divergence_free=True, no_penetration=True,
                         polynomial_degree=3, params={"amplitude": float(amplitude)})


def disc_rotation(offset: float = 80.0, slope: float = 200.0, center=(0.5, 0.5)) -> VelocityField:
    center = np.asarray(center, dtype=float)

    def u(x):
        rel = x - center
        profile = 0.5 * (1.0 + np.tanh(offset - slope * np.linalg.norm(rel, axis=1)))
        return profile[:, None] * np.column_stack((2.0 * rel[:, 1], -2.0 * rel[:, 0]))
    return VelocityField("disc-rotation", u, divergence_free=True, no_penetration=True,
                         params={"offset": float(offset), "slope": float(slope)})


def cellular_flow() -> VelocityField:
    def u(x):
        X, Y = np.pi * x[:, 0], np.pi * x[:, 1]
        return np.column_stack((np.sin(X) * np.cos(Y), -np.cos(X) * np.sin(Y)))
    return VelocityField("cellular-flow", u, divergence_free=True, no_penetration=True, quadrature_bump=4)


VELOCITY_FIELDS: Dict[str, Callable[..., VelocityField]] = {
    "zero": zero_velocity,
    "constant": constant_velocity,
    "cubic-vortex": cubic_vortex,
    "disc-rotation": disc_rotation,
    "cellular-flow": cellular_flow,
}


def build_velocity(spec) -> VelocityField:
    """VelocityField from a FieldSpec."""
    if spec.name not in VELOCITY_FIELDS:
        raise ValueError(f"Velocity field '{spec.name}' not found")
    return VELOCITY_FIELDS[spec.name](**spec.kwargs)


# --- initial data ------------------------------------------------------------

@dataclass
class InitialDatum:
    """Initial order parameter with its Laplacian and gradient when they exist.

    ``width`` is the length scale of the steepest layer of the datum, None
    for data without one.
    """
    value: object
    laplacian: Optional[Field] = None
    gradient: Optional[Field] = None
    width: Optional[float] = None
    rng_state: Optional[dict] = None


class ElementwiseField:
    """Field that is constant on each element."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, dtype=float)

    def restrict(self, element: int) -> Field:
        value = float(self.values[element])
        return lambda x: np.full(len(np.atleast_2d(x)), value)


def constant_datum(value: float = 0.0, **_) -> InitialDatum:
    zero = lambda x: np.zeros(len(x))
    return InitialDatum(value=lambda x: np.full(len(x), float(value)), laplacian=zero,
                        gradient=lambda x: np.zeros((len(x), 2)))


def tanh_profile(gamma: float, **_) -> InitialDatum:
    """tanh((2x - 1) / eps) with eps = 2 sqrt(2) gamma^2."""
    eps = 2.0 * np.sqrt(2.0) * gamma ** 2

    def c0(x):
        return np.tanh((2.0 * x[:, 0] - 1.0) / eps)

    def lap(x):
        t = np.tanh((2.0 * x[:, 0] - 1.0) / eps)
        return -8.0 / eps ** 2 * t * (1.0 - t ** 2)

    def grad(x):
        t = np.tanh((2.0 * x[:, 0] - 1.0) / eps)
        return np.column_stack((2.0 / eps * (1.0 - t ** 2), np.zeros(len(x))))

    # c0 = tanh((x - 1/2) / (eps / 2))
    return InitialDatum(value=c0, laplacian=lap, gradient=grad, width=0.5 * eps)


def random_circle(geometry, seed: int = 0, radius: float = 0.4, center=(0.5, 0.5), **_) -> InitialDatum:
    """
    Uniform random values in [-1, 1] inside a disc, -1 outside.

    An element is inside when its centroid is within ``radius`` of
    ``center``; values are drawn in element order.
    """
    rng = np.random.default_rng(seed)
    state = rng.bit_generator.state
    inside = np.linalg.norm(geometry.element_centroid - np.asarray(center, dtype=float), axis=1) <= radius
    values = np.full(geometry.mesh.n_elements, -1.0)
    values[inside] = rng.uniform(-1.0, 1.0, size=int(inside.sum()))
    logger.info(f"Random initial data on {int(inside.sum())} of {len(values)} elements (seed {seed})")
    return InitialDatum(value=ElementwiseField(values), rng_state=state)


def random_uniform(geometry, seed: int = 0, mean: float = 0.0, amplitude: float = 0.05, **_) -> InitialDatum:
    rng = np.random.default_rng(seed)
    state = rng.bit_generator.state
    values = mean + amplitude * rng.uniform(-1.0, 1.0, size=geometry.mesh.n_elements)
    return InitialDatum(value=ElementwiseField(values), rng_state=state)


INITIAL_CONDITIONS = {
    "constant": constant_datum,
    "tanh-profile": tanh_profile,
    "random-circle": random_circle,
    "random-uniform": random_uniform,
}


def build_initial_datum(spec, geometry, gamma: float) -> InitialDatum:
    """InitialDatum from a FieldSpec; random data use the spec's seed."""
    if spec.name not in INITIAL_CONDITIONS:
        raise ValueError(f"Initial condition '{spec.name}' not found")
    kwargs = spec.kwargs
    if spec.name in ("random-circle", "random-uniform"):
        return INITIAL_CONDITIONS[spec.name](geometry, seed=spec.seed if spec.seed is not None else 0, **kwargs)
    if spec.name == "tanh-profile":
        return tanh_profile(gamma=kwargs.pop("gamma", gamma), **kwargs)
    return INITIAL_CONDITIONS[spec.name](**kwargs)
