"""
Unit tests for quadrature rules, monomial bases and L2 projectors.
"""

import numpy as np
import pytest

from basis import (CellBasis, FaceBasis, LocalDofVector, element_quadrature, interpolate,
                   l2_project_cell, l2_project_face, monomial_exponents, polynomial_dimension,
                   segment_quadrature)
from mesh import build_mesh, compute_geometry
from scenarios.fields import tanh_profile
from utils.errors import QuadratureError


def polygon_monomial_integral(vertices: np.ndarray, a: int, b: int) -> float:
    """int_T x^a y^b dA = 1/(a+1) * closed integral of x^(a+1) y^b dy (Green's theorem)."""
    t, w = np.polynomial.legendre.leggauss(30)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    total = 0.0
    for p, q in zip(vertices, np.roll(vertices, -1, axis=0)):
        x = p[0] + t * (q[0] - p[0])
        y = p[1] + t * (q[1] - p[1])
        total += (q[1] - p[1]) * float(w @ (x ** (a + 1) * y ** b))
    return total / (a + 1)


def test_unit_square_weights(unit_element):
    assert element_quadrature(unit_element, 0).total == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("exactness", [0, 1, 2, 3, 5, 8, 12])
def test_polygon_rule_integrates_monomials(pentagon_element, exactness):
    rule = element_quadrature(pentagon_element, exactness)
    for a, b in monomial_exponents(exactness):
        oracle = polygon_monomial_integral(pentagon_element.vertices, a, b)
        value = rule.integrate(rule.points[:, 0] ** a * rule.points[:, 1] ** b)
        assert value == pytest.approx(oracle, rel=1e-12, abs=1e-13)


def test_regular_pentagon_x2y2():
    angles = np.pi / 2 + np.arange(5) * 2 * np.pi / 5
    vertices = np.column_stack((np.cos(angles), np.sin(angles)))
    element = compute_geometry(build_mesh(vertices, [tuple(range(5))])).element(0)
    rule = element_quadrature(element, 4)
    value = rule.integrate(rule.points[:, 0] ** 2 * rule.points[:, 1] ** 2)
    assert value == pytest.approx(polygon_monomial_integral(vertices, 2, 2), rel=1e-12)


def test_unit_segment():
    rule = segment_quadrature(np.array([0.0, 0.0]), np.array([1.0, 0.0]), 1)
    assert rule.integrate(rule.points[:, 0]) == pytest.approx(0.5)


@pytest.mark.parametrize("exactness", [-1, 41])
def test_unsupported_exactness(unit_element, exactness):
    with pytest.raises(QuadratureError):
        element_quadrature(unit_element, exactness)


def test_polynomial_dimension():
    assert [polynomial_dimension(d) for d in range(4)] == [1, 3, 6, 10]
    assert polynomial_dimension(-1) == 0
    assert monomial_exponents(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


def test_cell_basis_values_and_gradients(unit_element):
    basis = CellBasis(unit_element.centroid, unit_element.diameter, 2)
    point = np.array([[0.8, 0.3]])
    h = unit_element.diameter
    X, Y = 0.3 / h, -0.2 / h
    np.testing.assert_allclose(basis.values(point)[0], [1, X, Y, X * X, X * Y, Y * Y])
    grads = basis.gradients(point)[0]
    np.testing.assert_allclose(grads[1], [1 / h, 0])
    np.testing.assert_allclose(grads[4], [Y / h, X / h])


def test_orthonormal_basis(pentagon_element):
    rule = element_quadrature(pentagon_element, 6)
    basis = CellBasis(pentagon_element.centroid, pentagon_element.diameter, 3,
                      orthonormalize=True, quadrature=rule)
    phi = basis.values(rule.points)
    np.testing.assert_allclose(phi.T @ (rule.weights[:, None] * phi), np.eye(basis.dim), atol=1e-11)


def test_orthonormalize_requires_quadrature(unit_element):
    with pytest.raises(ValueError):
        CellBasis(unit_element.centroid, unit_element.diameter, 1, orthonormalize=True)


def test_cell_projection_of_constant(pentagon_element):
    coeffs = l2_project_cell(lambda x: np.full(len(x), 3.0), pentagon_element, 2)
    np.testing.assert_allclose(coeffs, [3, 0, 0, 0, 0, 0], atol=1e-12)


def test_cell_projection_reproduces_polynomials(pentagon_element):
    f = lambda x: 1.0 - 2.0 * x[:, 0] + x[:, 0] * x[:, 1] + 0.5 * x[:, 1] ** 2
    coeffs = l2_project_cell(f, pentagon_element, 2)
    rule = element_quadrature(pentagon_element, 6)
    basis = CellBasis(pentagon_element.centroid, pentagon_element.diameter, 2)
    np.testing.assert_allclose(basis.evaluate(coeffs, rule.points), f(rule.points), atol=1e-12)


def test_cell_projection_matches_least_squares(unit_element):
    coeffs = l2_project_cell(lambda x: np.sin(x[:, 0]), unit_element, 1, exactness=20)
    rule = element_quadrature(unit_element, 20)
    basis = CellBasis(unit_element.centroid, unit_element.diameter, 1)
    sq = np.sqrt(rule.weights)
    oracle, *_ = np.linalg.lstsq(sq[:, None] * basis.values(rule.points), sq * np.sin(rule.points[:, 0]), rcond=None)
    np.testing.assert_allclose(coeffs, oracle, atol=1e-10)


def test_face_projection():
    element = compute_geometry(build_mesh([(0, 0), (1, 0), (0, 1)], [(0, 1, 2)])).element(0)
    hypotenuse = next(face for face in element.faces if face.length > 1.2)

    constant = l2_project_face(lambda x: np.full(len(x), -2.0), hypotenuse, 1)
    np.testing.assert_allclose(constant, [-2.0, 0.0], atol=1e-13)

    mean = l2_project_face(lambda x: x[:, 0] * x[:, 1], hypotenuse, 0)
    assert mean[0] == pytest.approx(1.0 / 6.0)

    linear = lambda x: 2.0 + x[:, 0] - 3.0 * x[:, 1]
    coeffs = l2_project_face(linear, hypotenuse, 1)
    rule = segment_quadrature(hypotenuse.origin, hypotenuse.end, 4)
    np.testing.assert_allclose(FaceBasis(hypotenuse, 1).evaluate(coeffs, rule.points), linear(rule.points),
                               atol=1e-13)


def test_interpolate_constant(pentagon_element):
    v = interpolate(lambda x: np.ones(len(x)), pentagon_element, 1)
    assert len(v) == 6 + 5 * 2
    np.testing.assert_allclose(v.cell, [1, 0, 0, 0, 0, 0], atol=1e-12)
    for face in v.faces:
        np.testing.assert_allclose(face, [1, 0], atol=1e-12)


def test_interpolate_polynomials(pentagon_element):
    k = 1
    cell_poly = lambda x: x[:, 0] ** 2 - x[:, 0] * x[:, 1] + 0.25
    face_poly = lambda x: 0.5 - x[:, 0] + 2.0 * x[:, 1]
    basis = CellBasis(pentagon_element.centroid, pentagon_element.diameter, k + 1)
    rule = element_quadrature(pentagon_element, 6)
    v = interpolate(cell_poly, pentagon_element, k)
    np.testing.assert_allclose(basis.evaluate(v.cell, rule.points), cell_poly(rule.points), atol=1e-12)

    v = interpolate(face_poly, pentagon_element, k)
    for face, coeffs in zip(pentagon_element.faces, v.faces):
        pts = segment_quadrature(face.origin, face.end, 3).points
        np.testing.assert_allclose(FaceBasis(face, k).evaluate(coeffs, pts), face_poly(pts), atol=1e-12)


def test_interpolate_steep_tanh(unit_element):
    datum = tanh_profile(gamma=5e-2)
    v = interpolate(datum.value, unit_element, 0, exactness=20)
    assert np.all(np.isfinite(v.values))
    assert -1.0 <= v.cell[0] <= 1.0


def test_local_dof_vector_layout():
    v = LocalDofVector.from_blocks(np.arange(3.0), [np.array([10.0]), np.array([11.0])])
    assert (v.cell_dim, v.face_dim, v.n_faces) == (3, 1, 2)
    assert v.face(1)[0] == 11.0
    assert len(LocalDofVector.zeros(1, 4)) == 6 + 4 * 2
    with pytest.raises(ValueError):
        LocalDofVector(np.zeros(4), 3, 1, 2)
