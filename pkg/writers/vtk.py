"""
Legacy ASCII VTK snapshots.

The coarse file is an UNSTRUCTURED_GRID with one POLYGON cell (type 7)
per element and two CELL_DATA scalars, "order_parameter" and
"chemical_potential", holding the cell means of c_h and w_h. The
optional fine file samples the cell polynomials at the vertices of the
centroid-fan sub-triangles (TRIANGLE cells, type 5, unshared points) as
POINT_DATA, which shows the high-order content for k > 0.

Numbers are written with %.17g so the files are reproducible bit for bit.
"""

import logging
import os
from typing import List, Optional

import numpy as np

from hho.local_operators import make_cell_basis
from utils.errors import OutputError

logger = logging.getLogger("hho_ch.writers.vtk")

VTK_TRIANGLE = 5
VTK_POLYGON = 7
FIELD_NAMES = ("order_parameter", "chemical_potential")


def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def cell_means(vector: np.ndarray, operators) -> np.ndarray:
    """Mean value of the cell polynomial on every element."""
    vector = np.asarray(vector)
    means = np.zeros(operators.dofmap.n_elements)
    for e, loc in enumerate(operators.locals):
        means[e] = loc.cell_moments @ vector[operators.dofmap.cell_dofs(e)] / operators.geometry.element_area[e]
    return means


def _scalars(name: str, values: np.ndarray) -> List[str]:
    lines = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    lines += [_fmt(v) for v in values]
    return lines


def _write(path: str, lines: List[str]):
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, 'w') as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise OutputError(f"cannot write VTK file: {e}", path=path)


def write_vtk_snapshot(state, operators, path: str, title: Optional[str] = None) -> str:
    """
    Write the cell means of c and w on the polygonal mesh.

    Args:
        state: SolverState (uses c, w, time and step)
        operators: DiscreteOperators of the run
        path: Output .vtk file
        title: Header line (defaults to the step and time)

    Returns:
        str: Path written

    Raises:
        OutputError: non-finite state or I/O failure
    """
    if not (np.all(np.isfinite(state.c)) and np.all(np.isfinite(state.w))):
        raise OutputError("state contains non-finite values", path=path)
    mesh = operators.geometry.mesh
    title = title or f"hho-ch step {state.step} time {_fmt(state.time)}"
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " "), "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {mesh.n_vertices} double")
    lines += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in mesh.vertices]
    size = sum(len(el) + 1 for el in mesh.elements)
    lines.append(f"CELLS {mesh.n_elements} {size}")
    lines += [" ".join(str(v) for v in (len(el),) + tuple(el)) for el in mesh.elements]
    lines.append(f"CELL_TYPES {mesh.n_elements}")
    lines += [str(VTK_POLYGON)] * mesh.n_elements
    lines.append(f"CELL_DATA {mesh.n_elements}")
    lines += _scalars(FIELD_NAMES[0], cell_means(state.c, operators))
    lines += _scalars(FIELD_NAMES[1], cell_means(state.w, operators))
    _write(path, lines)
    logger.debug(f"VTK snapshot written to {path}")
    return path


def write_vtk_fine_snapshot(state, operators, path: str) -> str:
    """Point-sampled cell polynomials on the sub-triangulation."""
    points, c_values, w_values = [], [], []
    for element in operators.geometry.elements:
        basis = make_cell_basis(element, operators.k, operators.options)
        cells = operators.dofmap.cell_dofs(element.index)
        pts = element.sub_triangles.reshape(-1, 2)
        points.append(pts)
        c_values.append(basis.evaluate(np.asarray(state.c)[cells], pts))
        w_values.append(basis.evaluate(np.asarray(state.w)[cells], pts))
    points = np.concatenate(points)
    n_tri = len(points) // 3
    lines = ["# vtk DataFile Version 3.0", f"hho-ch fine step {state.step} time {_fmt(state.time)}",
             "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {len(points)} double"]
    lines += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in points]
    lines.append(f"CELLS {n_tri} {4 * n_tri}")
    lines += [f"3 {3 * t} {3 * t + 1} {3 * t + 2}" for t in range(n_tri)]
    lines.append(f"CELL_TYPES {n_tri}")
    lines += [str(VTK_TRIANGLE)] * n_tri
    lines.append(f"POINT_DATA {len(points)}")
    lines += _scalars(FIELD_NAMES[0], np.concatenate(c_values))
    lines += _scalars(FIELD_NAMES[1], np.concatenate(w_values))
    _write(path, lines)
    return path
