"""
Quadrature rules on polygons and segments.

Polygons are integrated through the centroid-fan sub-triangulation stored
in the geometry cache. Each sub-triangle uses a collapsed (Duffy) tensor
product of Gauss-Legendre rules, exact for polynomials of the requested
total degree. Segments use Gauss-Legendre directly.
"""

import functools
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.errors import QuadratureError

MAX_QUADRATURE_EXACTNESS = 40


@dataclass(frozen=True, eq=False)
class QuadRule:
    """Points and weights of a quadrature rule with its exactness degree."""
    points: np.ndarray
    weights: np.ndarray
    exactness: int

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integrate sampled values (first axis runs over the points)."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def _check_exactness(exactness: int) -> int:
    exactness = int(exactness)
    if exactness < 0 or exactness > MAX_QUADRATURE_EXACTNESS:
        raise QuadratureError(
            f"exactness {exactness} outside the supported range [0, {MAX_QUADRATURE_EXACTNESS}]")
    return exactness


@functools.lru_cache(maxsize=64)
def gauss_legendre_unit(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]; weights sum to 1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@functools.lru_cache(maxsize=64)
def reference_triangle_rule(exactness: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Collapsed Gauss rule on the triangle (0,0), (1,0), (0,1).

    The map (xi, eta) -> (xi, eta (1 - xi)) has Jacobian (1 - xi), which
    raises the degree in xi by one.
    """
    n_xi = (exactness + 1) // 2 + 1
    n_eta = exactness // 2 + 1
    xi, w_xi = gauss_legendre_unit(n_xi)
    eta, w_eta = gauss_legendre_unit(n_eta)
    XI, ETA = np.meshgrid(xi, eta, indexing='ij')
    W = np.outer(w_xi * (1.0 - xi), w_eta)
    points = np.column_stack((XI.ravel(), (ETA * (1.0 - XI)).ravel()))
    return points, W.ravel()


def triangle_quadrature(vertices: np.ndarray, exactness: int) -> QuadRule:
    """Quadrature on a physical triangle given by its three vertices."""
    exactness = _check_exactness(exactness)
    ref_pts, ref_w = reference_triangle_rule(exactness)
    a, b, c = np.asarray(vertices, dtype=float)
    jac = np.column_stack((b - a, c - a))
    det = abs(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0])
    return QuadRule(points=a + ref_pts @ jac.T, weights=ref_w * det, exactness=exactness)


def element_quadrature(element, exactness: int) -> QuadRule:
    """
    Quadrature on a polygonal element via its centroid-fan sub-triangles.

    Args:
        element: ElementGeometry
        exactness: Total polynomial degree integrated exactly

    Returns:
        QuadRule whose weights sum to the element area
    """
    exactness = _check_exactness(exactness)
    rules = [triangle_quadrature(tri, exactness) for tri in element.sub_triangles]
    return QuadRule(
        points=np.concatenate([r.points for r in rules]),
        weights=np.concatenate([r.weights for r in rules]),
        exactness=exactness,
    )


def segment_quadrature(a: np.ndarray, b: np.ndarray, exactness: int) -> QuadRule:
    """Gauss-Legendre rule on the segment [a, b]."""
    exactness = _check_exactness(exactness)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t, w = gauss_legendre_unit(exactness // 2 + 1)
    length = float(np.hypot(*(b - a)))
    return QuadRule(points=a + np.outer(t, b - a), weights=w * length, exactness=exactness)


def face_quadrature(face, exactness: int) -> QuadRule:
    """Gauss-Legendre rule on a face (FaceGeometry)."""
    return segment_quadrature(face.origin, face.end, exactness)
