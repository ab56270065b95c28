"""
Scaled monomial bases on elements and faces.

Cell basis functions are ((x - x_T)/h_T)^a ((y - y_T)/h_T)^b with a + b <= l,
ordered by total degree, so that the first dim P^m functions span P^m for
every m <= l and function 0 is the constant 1. Face basis functions are
((s - s_F)/h_F)^j in the arc-length coordinate measured from the lower
indexed vertex of the face.

The evaluation kernels are compiled with Numba.
"""

from typing import Optional

import numpy as np
from numba import jit
from scipy.linalg import cholesky, solve_triangular


def polynomial_dimension(degree: int) -> int:
    """Dimension of the bivariate polynomial space of total degree ``degree``."""
    if degree < 0:
        return 0
    return (degree + 1) * (degree + 2) // 2


def monomial_exponents(degree: int) -> np.ndarray:
    """Exponent pairs (a, b) ordered by total degree, then by decreasing a."""
    pairs = [(d - i, i) for d in range(degree + 1) for i in range(d + 1)]
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


@jit(nopython=True)
def scaled_monomials_numba(points, center, scale, exponents):
    """
    Evaluate scaled monomials and their gradients.

    Args:
        points: (n, 2) evaluation points
        center: (2,) scaling centre
        scale: scaling length
        exponents: (m, 2) integer exponents

    Returns:
        Tuple of values (n, m) and gradients (n, m, 2)
    """
    n = points.shape[0]
    m = exponents.shape[0]
    values = np.empty((n, m))
    grads = np.empty((n, m, 2))
    for q in range(n):
        X = (points[q, 0] - center[0]) / scale
        Y = (points[q, 1] - center[1]) / scale
        for i in range(m):
            a = exponents[i, 0]
            b = exponents[i, 1]
            xa = X ** a
            yb = Y ** b
            values[q, i] = xa * yb
            if a > 0:
                grads[q, i, 0] = a * X ** (a - 1) * yb / scale
            else:
                grads[q, i, 0] = 0.0
            if b > 0:
                grads[q, i, 1] = b * xa * Y ** (b - 1) / scale
            else:
                grads[q, i, 1] = 0.0
    return values, grads


class CellBasis:
    """
    Scaled monomial basis of P^degree on one element.

    With ``orthonormalize`` the monomials are replaced by their
    Gram-Schmidt orthonormalisation in L2(T), computed from the Cholesky
    factor of the monomial mass matrix; the span of the first dim P^m
    functions is unchanged.
    """

    def __init__(self, center: np.ndarray, diameter: float, degree: int,
                 orthonormalize: bool = False, quadrature=None, element: Optional[int] = None):
        self.center = np.asarray(center, dtype=float)
        self.diameter = float(diameter)
        self.degree = int(degree)
        self.element = element
        self.exponents = monomial_exponents(self.degree)
        self.dim = polynomial_dimension(self.degree)
        self._transform = None
        if orthonormalize:
            if quadrature is None:
                raise ValueError("orthonormalize requires a quadrature rule on the element")
            values, _ = self._raw(quadrature.points)
            mass = values.T @ (quadrature.weights[:, None] * values)
            lower = cholesky(mass, lower=True)
            self._transform = solve_triangular(lower, np.eye(self.dim), lower=True).T

    def _raw(self, points: np.ndarray):
        pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
        return scaled_monomials_numba(pts, self.center, self.diameter, self.exponents)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Basis values, shape (n_points, dim)."""
        values, _ = self._raw(points)
        return values if self._transform is None else values @ self._transform

    def gradients(self, points: np.ndarray) -> np.ndarray:
        """Basis gradients, shape (n_points, dim, 2)."""
        _, grads = self._raw(points)
        if self._transform is None:
            return grads
        return np.einsum('qjd,jk->qkd', grads, self._transform)

    def evaluate(self, coefficients: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Evaluate the polynomial with the given coefficients."""
        return self.values(points) @ np.asarray(coefficients)[: self.dim]


class FaceBasis:
    """Scaled monomial basis of P^degree on a face, in arc-length coordinate."""

    def __init__(self, face, degree: int):
        self.face = face
        self.origin = np.asarray(face.origin, dtype=float)
        self.tangent = np.asarray(face.tangent, dtype=float)
        self.diameter = float(face.diameter)
        self.degree = int(degree)
        self.dim = self.degree + 1
        # arc length of the midpoint measured from the origin vertex
        self.s_mid = 0.5 * float(face.length)

    def coordinate(self, points: np.ndarray) -> np.ndarray:
        """Arc-length coordinate s of points lying on the face."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return (pts - self.origin) @ self.tangent

    def values(self, points: np.ndarray) -> np.ndarray:
        t = (self.coordinate(points) - self.s_mid) / self.diameter
        return np.vander(t, self.dim, increasing=True)

    def evaluate(self, coefficients: np.ndarray, points: np.ndarray) -> np.ndarray:
        return self.values(points) @ np.asarray(coefficients)
