"""
Structured mesh generators on axis-aligned rectangles.

Three families are provided: Cartesian quadrilaterals, triangles obtained
by splitting each Cartesian cell along its diagonal, and a hexagon-dominant
"honeycomb" made of staggered rows of convex hexagons with quadrilateral
half-cells on the lateral boundary.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from mesh.core import Mesh, build_mesh
from utils.errors import GeometryError, MeshError

logger = logging.getLogger("hho_ch.mesh.generators")

Domain = Tuple[float, float, float, float]
UNIT_SQUARE: Domain = (0.0, 1.0, 0.0, 1.0)


def _check(nx: int, ny: int, domain: Sequence[float]) -> Domain:
    if int(nx) < 1 or int(ny) < 1:
        raise MeshError(f"nx and ny must be positive, got ({nx}, {ny})")
    if len(domain) != 4:
        raise MeshError("domain must be (xmin, xmax, ymin, ymax)")
    xmin, xmax, ymin, ymax = (float(v) for v in domain)
    if not (xmax > xmin and ymax > ymin):
        raise GeometryError(f"degenerate rectangle {tuple(domain)}")
    return xmin, xmax, ymin, ymax


def _grid_vertices(nx: int, ny: int, domain: Domain) -> np.ndarray:
    xmin, xmax, ymin, ymax = domain
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    return np.column_stack((X.ravel(), Y.ravel()))


def generate_cartesian_mesh(nx: int, ny: int, domain: Sequence[float] = UNIT_SQUARE) -> Mesh:
    """
    Uniform nx-by-ny quadrilateral mesh.

    Args:
        nx: Number of cells along x
        ny: Number of cells along y
        domain: (xmin, xmax, ymin, ymax)

    Returns:
        Mesh with nx*ny counterclockwise quadrilaterals
    """
    dom = _check(nx, ny, domain)
    verts = _grid_vertices(nx, ny, dom)
    stride = nx + 1
    elements = []
    for j in range(ny):
        for i in range(nx):
            v0 = j * stride + i
            elements.append((v0, v0 + 1, v0 + 1 + stride, v0 + stride))
    mesh = build_mesh(verts, elements, provenance={
        "generator": "cartesian", "nx": int(nx), "ny": int(ny), "domain": list(dom)})
    logger.info(f"Generated Cartesian mesh {nx}x{ny} ({mesh.n_elements} elements)")
    return mesh


def generate_triangular_mesh(nx: int, ny: int, domain: Sequence[float] = UNIT_SQUARE) -> Mesh:
    """
    Split each cell of an nx-by-ny Cartesian grid into two triangles.

    The diagonal runs from the lower-left to the upper-right corner.
    """
    dom = _check(nx, ny, domain)
    verts = _grid_vertices(nx, ny, dom)
    stride = nx + 1
    elements = []
    for j in range(ny):
        for i in range(nx):
            v0 = j * stride + i
            v1, v2, v3 = v0 + 1, v0 + 1 + stride, v0 + stride
            elements.append((v0, v1, v2))
            elements.append((v0, v2, v3))
    mesh = build_mesh(verts, elements, provenance={
        "generator": "triangular", "nx": int(nx), "ny": int(ny), "domain": list(dom)})
    logger.info(f"Generated triangular mesh {nx}x{ny} ({mesh.n_elements} elements)")
    return mesh


def generate_honeycomb_mesh(nx: int, ny: int, domain: Sequence[float] = UNIT_SQUARE) -> Mesh:
    """
    Hexagon-dominant mesh made of staggered rows.

    Every horizontal grid line carries 2*nx + 1 equally spaced points. Even
    rows hold nx cells between integer points, odd rows are shifted by half
    a cell and end with two half-cells. Points on interior lines are moved
    up and down by a quarter row height, alternating along the line and
    between lines, which turns every interior cell into a convex hexagon.

    Args:
        nx: Cells per even row
        ny: Number of rows
        domain: (xmin, xmax, ymin, ymax)

    Returns:
        Mesh with nx*ny + ny//2 elements
    """
    xmin, xmax, ymin, ymax = _check(nx, ny, domain)
    npts = 2 * nx + 1
    dy = (ymax - ymin) / ny
    shift = 0.25 * dy

    verts = np.empty(((ny + 1) * npts, 2))
    for j in range(ny + 1):
        sign = 1.0 if j % 2 == 0 else -1.0
        for p in range(npts):
            x = xmin + (xmax - xmin) * p / (2 * nx)
            y = ymin + j * dy
            if 0 < j < ny:
                y += sign * shift if p % 2 == 0 else -sign * shift
            verts[j * npts + p] = (x, y)

    elements: List[Tuple[int, ...]] = []
    for j in range(ny):
        if j % 2 == 0:
            spans = [(2 * i, 2 * i + 2) for i in range(nx)]
        else:
            spans = [(0, 1)] + [(2 * i - 1, 2 * i + 1) for i in range(1, nx)] + [(2 * nx - 1, 2 * nx)]
        for p0, p1 in spans:
            bottom = [j * npts + p for p in range(p0, p1 + 1)]
            top = [(j + 1) * npts + p for p in range(p1, p0 - 1, -1)]
            elements.append(tuple(bottom + top))

    mesh = build_mesh(verts, elements, provenance={
        "generator": "honeycomb", "nx": int(nx), "ny": int(ny),
        "domain": [xmin, xmax, ymin, ymax]})
    logger.info(f"Generated honeycomb mesh {nx}x{ny} ({mesh.n_elements} elements)")
    return mesh
