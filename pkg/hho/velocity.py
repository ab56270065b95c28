"""
Advective velocity fields.

A VelocityField wraps a vectorised callable u(points) -> (n, 2) together
with the properties the discretisation relies on: whether it is divergence
free, whether u.n vanishes on the domain boundary, and how many extra
quadrature degrees its integrals need.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from basis.quadrature import face_quadrature

logger = logging.getLogger("hho_ch.hho.velocity")

DEFAULT_VELOCITY_BUMP = 2


@dataclass(frozen=True, eq=False)
class VelocityField:
    """Velocity field with its declared properties."""
    name: str
    function: Callable[[np.ndarray], np.ndarray]
    divergence_free: bool = True
    no_penetration: bool = False
    polynomial_degree: Optional[int] = None
    quadrature_bump: int = DEFAULT_VELOCITY_BUMP
    params: Dict[str, float] = field(default_factory=dict)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.asarray(self.function(pts), dtype=float).reshape(-1, 2)

    @property
    def extra_degree(self) -> int:
        """Quadrature degrees added on top of the polynomial integrand degree."""
        if self.polynomial_degree is not None:
            return int(self.polynomial_degree)
        return int(self.quadrature_bump)

    @property
    def is_zero(self) -> bool:
        return self.polynomial_degree == 0 and not np.any(self(np.zeros((1, 2))))

    def reversed(self) -> "VelocityField":
        """The field -u with the same declared properties."""
        return VelocityField(
            name=f"{self.name}-reversed",
            function=lambda x, f=self.function: -np.asarray(f(x), dtype=float),
            divergence_free=self.divergence_free,
            no_penetration=self.no_penetration,
            polynomial_degree=self.polynomial_degree,
            quadrature_bump=self.quadrature_bump,
            params=dict(self.params),
        )

    def element_flux_defect(self, geometry, exactness: int = 8) -> np.ndarray:
        """Net outflow of u through the boundary of each element."""
        defects = np.zeros(geometry.mesh.n_elements)
        for element in geometry.elements:
            total = 0.0
            for face, normal in zip(element.faces, element.normals):
                rule = face_quadrature(face, exactness)
                total += rule.weights @ (self(rule.points) @ normal)
            defects[element.index] = total
        return defects

    def boundary_flux_defect(self, geometry, exactness: int = 8) -> float:
        """Largest |u.n| sampled at quadrature points of boundary faces."""
        worst = 0.0
        mesh = geometry.mesh
        for f in mesh.boundary_faces:
            e = int(mesh.face_elements[f, 0])
            element = geometry.element(e)
            local = int(np.flatnonzero(element.face_ids == f)[0])
            rule = face_quadrature(element.faces[local], exactness)
            worst = max(worst, float(np.abs(self(rule.points) @ element.normals[local]).max()))
        return worst

    def check(self, geometry, tolerance: float = 1e-10) -> bool:
        """Log whether the declared flags hold on this mesh."""
        ok = True
        if self.divergence_free:
            scale = max(1.0, float(np.abs(self(geometry.element_centroid)).max()))
            defect = float(np.abs(self.element_flux_defect(geometry)).max())
            if defect > tolerance * scale * geometry.h:
                logger.warning(f"Velocity '{self.name}' declared divergence free but element flux defect is {defect:.3e}")
                ok = False
        if self.no_penetration:
            defect = self.boundary_flux_defect(geometry)
            if defect > tolerance:
                logger.warning(f"Velocity '{self.name}' declared u.n = 0 on the boundary but |u.n| reaches {defect:.3e}")
                ok = False
        return ok


def zero_velocity() -> VelocityField:
    return VelocityField(
        name="zero",
        function=lambda x: np.zeros_like(x),
        divergence_free=True,
        no_penetration=True,
        polynomial_degree=0,
    )


def constant_velocity(ux: float, uy: float) -> VelocityField:
    return VelocityField(
        name="constant",
        function=lambda x: np.tile(np.array([ux, uy], dtype=float), (len(x), 1)),
        divergence_free=True,
        no_penetration=(ux == 0.0 and uy == 0.0),
        polynomial_degree=0,
        params={"ux": float(ux), "uy": float(uy)},
    )
