"""Polynomial bases, quadrature rules and L2 projectors."""

from basis.monomials import (CellBasis, FaceBasis, monomial_exponents, polynomial_dimension,
                             scaled_monomials_numba)
from basis.projection import (LocalDofVector, cell_basis_for, interpolate, l2_project_cell,
                              l2_project_face)
from basis.quadrature import (MAX_QUADRATURE_EXACTNESS, QuadRule, element_quadrature,
                              face_quadrature, segment_quadrature, triangle_quadrature)
