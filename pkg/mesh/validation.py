"""
Mesh admissibility checks.

This module inspects a Mesh and lists every violated invariant instead of
stopping at the first one, so that a broken input file can be fixed in a
single pass:
- positive signed area and centroid star-shapedness of each element
- one or two incident elements per face, opposite orientation on interfaces
- bounded number of faces per element
- element areas summing to the area enclosed by the boundary faces
"""

import logging
from dataclasses import dataclass, field
from typing import Iterator, List

import numpy as np

from mesh.core import BOUNDARY, Mesh, signed_area

logger = logging.getLogger("hho_ch.mesh.validation")

MAX_FACES_PER_ELEMENT = 64
AREA_RTOL = 1e-12


@dataclass(frozen=True)
class MeshIssue:
    """One violated invariant."""
    entity: str
    index: int
    message: str

    def __str__(self) -> str:
        return f"{self.entity} {self.index}: {self.message}"


@dataclass
class MeshReport:
    """Diagnostic report; empty iff the mesh is admissible."""
    issues: List[MeshIssue] = field(default_factory=list)

    def add(self, entity: str, index: int, message: str) -> None:
        self.issues.append(MeshIssue(entity, int(index), message))

    @property
    def is_admissible(self) -> bool:
        return not self.issues

    def __len__(self) -> int:
        return len(self.issues)

    def __iter__(self) -> Iterator[MeshIssue]:
        return iter(self.issues)

    def summary(self) -> str:
        if not self.issues:
            return "mesh is admissible"
        return "\n".join(str(issue) for issue in self.issues)


def validate_mesh(mesh: Mesh) -> MeshReport:
    """
    Check a mesh against the admissibility rules.

    Args:
        mesh: Mesh to inspect

    Returns:
        MeshReport listing every violation; empty for an admissible mesh
    """
    report = MeshReport()
    verts = mesh.vertices

    # Elements
    total_area = 0.0
    for e, loop in enumerate(mesh.elements):
        pts = verts[list(loop)]
        area = signed_area(pts)
        total_area += area
        if area < 0.0:
            report.add("element", e, f"negative area ({area:.3e}), vertex loop is clockwise")
            continue
        if area == 0.0:
            report.add("element", e, "zero area")
            continue
        if len(loop) > MAX_FACES_PER_ELEMENT:
            report.add("element", e, f"{len(loop)} faces exceeds the bound {MAX_FACES_PER_ELEMENT}")
        centroid = _centroid(pts, area)
        nxt = np.roll(pts, -1, axis=0)
        fan = (pts[:, 0] - centroid[0]) * (nxt[:, 1] - centroid[1]) - (pts[:, 1] - centroid[1]) * (nxt[:, 0] - centroid[0])
        if np.any(fan <= 0.0):
            report.add("element", e, "not star-shaped with respect to its centroid")

    # Faces
    flags = _face_flags(mesh)
    for f, (left, right) in enumerate(mesh.face_elements):
        a, b = mesh.faces[f]
        if np.allclose(verts[a], verts[b], rtol=0.0, atol=0.0):
            report.add("face", f, "zero length")
        if left == BOUNDARY and right == BOUNDARY:
            report.add("face", f, "dangling (no incident element)")
            continue
        if left != BOUNDARY and right != BOUNDARY:
            fl, fr = flags.get((f, int(left))), flags.get((f, int(right)))
            if fl == fr:
                report.add("face", f, f"interface shared by elements {left} and {right} with the same orientation")

    # Area partition against the boundary loop
    boundary_area = 0.0
    for f in mesh.boundary_faces:
        e = int(mesh.face_elements[f, 0])
        a, b = mesh.faces[f]
        if flags.get((int(f), e), 1) < 0:
            a, b = b, a
        boundary_area += 0.5 * (verts[a, 0] * verts[b, 1] - verts[b, 0] * verts[a, 1])
    if abs(total_area - boundary_area) > AREA_RTOL * max(abs(boundary_area), 1e-300):
        report.add("mesh", 0, f"element areas sum to {total_area:.16g}, boundary encloses {boundary_area:.16g}")

    if report.issues:
        logger.warning(f"Mesh validation found {len(report)} issue(s)")
    else:
        logger.debug("Mesh validation passed")
    return report


def _centroid(pts: np.ndarray, area: float) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * area)


def _face_flags(mesh: Mesh) -> dict:
    flags = {}
    for e, (fids, orient) in enumerate(zip(mesh.element_faces, mesh.element_orientations)):
        for f, s in zip(fids, orient):
            flags[(int(f), e)] = int(s)
    return flags
