"""
Polygonal mesh data structures and geometry precomputation.

A Mesh stores vertices, counterclockwise element vertex loops and the faces
shared between elements. Faces carry the direction in which they were first
listed; each element sees a face with an orientation flag (+1 when it
traverses the face in the stored direction, -1 otherwise), so the outward
normal of element T on face F is n_TF = flag * n_F.

GeometryCache holds everything the discretisation needs about the shapes:
areas, centroids, diameters, centroid-fan sub-triangles, face lengths,
midpoints, tangents and normals.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from utils.errors import GeometryError, MeshTopologyError

logger = logging.getLogger("hho_ch.mesh.core")

BOUNDARY = -1


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable 2D polygonal mesh."""
    vertices: np.ndarray
    elements: Tuple[Tuple[int, ...], ...]
    faces: np.ndarray
    face_elements: np.ndarray
    element_faces: Tuple[np.ndarray, ...]
    element_orientations: Tuple[np.ndarray, ...]
    provenance: Dict[str, object] = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def boundary_faces(self) -> np.ndarray:
        """Indices of faces with exactly one incident element."""
        fe = self.face_elements
        return np.flatnonzero((fe[:, 0] >= 0) & (fe[:, 1] == BOUNDARY))

    @property
    def interior_faces(self) -> np.ndarray:
        fe = self.face_elements
        return np.flatnonzero((fe[:, 0] >= 0) & (fe[:, 1] >= 0))

    def bounding_box(self) -> Tuple[float, float, float, float]:
        xmin, ymin = self.vertices.min(axis=0)
        xmax, ymax = self.vertices.max(axis=0)
        return float(xmin), float(xmax), float(ymin), float(ymax)


def signed_area(points: np.ndarray) -> float:
    """Shoelace signed area of a closed polygon given by its vertex loop."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def build_mesh(vertices: Sequence[Sequence[float]],
               elements: Iterable[Sequence[int]],
               faces: Optional[Sequence[Sequence[int]]] = None,
               provenance: Optional[Dict[str, object]] = None) -> Mesh:
    """
    Build the face connectivity of a polygonal mesh.

    When ``faces`` is omitted every element edge becomes a face, and an edge
    met twice becomes an interface. When ``faces`` is given, each element
    edge must be one of them; listed faces that no element uses are kept
    (validate_mesh reports them as dangling).

    Args:
        vertices: (nv, 2) coordinates
        elements: vertex-index loops, counterclockwise
        faces: optional explicit list of vertex pairs
        provenance: free-form description of where the mesh came from

    Returns:
        Mesh with connectivity filled in

    Raises:
        MeshTopologyError: element with fewer than three distinct vertices,
            an unknown vertex index, an edge missing from ``faces``, or an
            edge shared by more than two elements
    """
    verts = np.asarray(vertices, dtype=float).reshape(-1, 2)
    loops = tuple(tuple(int(v) for v in loop) for loop in elements)
    nv = len(verts)

    face_list: List[Tuple[int, int]] = []
    lookup: Dict[Tuple[int, int], int] = {}
    if faces is not None:
        for pair in faces:
            a, b = int(pair[0]), int(pair[1])
            key = (min(a, b), max(a, b))
            if key in lookup:
                raise MeshTopologyError(f"face ({a}, {b}) listed twice")
            lookup[key] = len(face_list)
            face_list.append((a, b))

    incidence: List[List[int]] = [[BOUNDARY, BOUNDARY] for _ in face_list]
    element_faces: List[np.ndarray] = []
    element_orientations: List[np.ndarray] = []

    for e, loop in enumerate(loops):
        if len(loop) < 3 or len(set(loop)) != len(loop):
            raise MeshTopologyError("needs at least three distinct vertices", element=e)
        if min(loop) < 0 or max(loop) >= nv:
            raise MeshTopologyError("vertex index out of range", element=e)
        ids, flags = [], []
        for i, a in enumerate(loop):
            b = loop[(i + 1) % len(loop)]
            key = (min(a, b), max(a, b))
            f = lookup.get(key)
            if f is None:
                if faces is not None:
                    raise MeshTopologyError(f"edge ({a}, {b}) is not a listed face", element=e)
                f = len(face_list)
                lookup[key] = f
                face_list.append((a, b))
                incidence.append([BOUNDARY, BOUNDARY])
            slots = incidence[f]
            if slots[0] == BOUNDARY:
                slots[0] = e
            elif slots[1] == BOUNDARY:
                slots[1] = e
            else:
                raise MeshTopologyError(f"edge ({a}, {b}) already shared by two elements", element=e)
            ids.append(f)
            flags.append(1 if face_list[f] == (a, b) else -1)
        element_faces.append(np.asarray(ids, dtype=np.int64))
        element_orientations.append(np.asarray(flags, dtype=np.int64))

    mesh = Mesh(
        vertices=verts,
        elements=loops,
        faces=np.asarray(face_list, dtype=np.int64).reshape(-1, 2),
        face_elements=np.asarray(incidence, dtype=np.int64).reshape(-1, 2),
        element_faces=tuple(element_faces),
        element_orientations=tuple(element_orientations),
        provenance=dict(provenance or {}),
    )
    logger.debug(f"Built mesh with {mesh.n_elements} elements and {mesh.n_faces} faces")
    return mesh


@dataclass(frozen=True, eq=False)
class FaceGeometry:
    """Geometry of one face; the arc-length coordinate starts at ``origin``."""
    index: int
    origin: np.ndarray
    end: np.ndarray
    length: float
    midpoint: np.ndarray
    diameter: float
    tangent: np.ndarray
    normal: np.ndarray
    is_boundary: bool


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """Geometry of one element together with its faces in loop order."""
    index: int
    vertices: np.ndarray
    area: float
    centroid: np.ndarray
    diameter: float
    face_ids: np.ndarray
    normals: np.ndarray
    faces: Tuple[FaceGeometry, ...]
    sub_triangles: np.ndarray

    @property
    def n_faces(self) -> int:
        return len(self.face_ids)


@dataclass(frozen=True, eq=False)
class GeometryCache:
    """Precomputed element and face geometry for a mesh."""
    mesh: Mesh
    element_area: np.ndarray
    element_centroid: np.ndarray
    element_diameter: np.ndarray
    face_length: np.ndarray
    face_midpoint: np.ndarray
    face_normal: np.ndarray
    face_tangent: np.ndarray
    face_origin: np.ndarray
    elements: Tuple[ElementGeometry, ...]
    h: float

    @property
    def face_diameter(self) -> np.ndarray:
        return self.face_length

    def element(self, index: int) -> ElementGeometry:
        return self.elements[index]

    def normals(self, index: int) -> np.ndarray:
        """Outward unit normals n_TF of element ``index`` in face order."""
        return self.elements[index].normals

    @property
    def domain_area(self) -> float:
        return float(self.element_area.sum())


def compute_geometry(mesh: Mesh) -> GeometryCache:
    """
    Compute areas, centroids, diameters, normals and fan sub-triangulations.

    Args:
        mesh: Mesh with counterclockwise element loops

    Returns:
        GeometryCache for the mesh

    Raises:
        GeometryError: zero-length face, non-positive element area, or an
            element that is not star-shaped with respect to its centroid
    """
    verts = mesh.vertices

    # Faces
    a = verts[mesh.faces[:, 0]]
    b = verts[mesh.faces[:, 1]]
    d = b - a
    lengths = np.hypot(d[:, 0], d[:, 1])
    bad = np.flatnonzero(lengths <= 0.0)
    if bad.size:
        raise GeometryError(f"face {int(bad[0])} has zero length")
    normals = np.column_stack((d[:, 1], -d[:, 0])) / lengths[:, None]
    midpoints = 0.5 * (a + b)
    lower_first = mesh.faces[:, 0] <= mesh.faces[:, 1]
    origins = np.where(lower_first[:, None], a, b)
    tangents = np.where(lower_first[:, None], d, -d) / lengths[:, None]
    boundary = mesh.face_elements[:, 1] == BOUNDARY

    face_geoms = [
        FaceGeometry(
            index=f,
            origin=origins[f],
            end=np.where(lower_first[f], b[f], a[f]),
            length=float(lengths[f]),
            midpoint=midpoints[f],
            diameter=float(lengths[f]),
            tangent=tangents[f],
            normal=normals[f],
            is_boundary=bool(boundary[f]),
        )
        for f in range(mesh.n_faces)
    ]

    # Elements
    n = mesh.n_elements
    areas = np.empty(n)
    centroids = np.empty((n, 2))
    diameters = np.empty(n)
    element_geoms = []
    for e, loop in enumerate(mesh.elements):
        pts = verts[list(loop)]
        x, y = pts[:, 0], pts[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = 0.5 * cross.sum()
        if area <= 0.0:
            raise GeometryError(f"element {e} has non-positive area {area:.3e}")
        cx = ((x + xn) * cross).sum() / (6.0 * area)
        cy = ((y + yn) * cross).sum() / (6.0 * area)
        centroid = np.array([cx, cy])
        diameter = float(pdist(pts).max())

        tris = np.stack([np.broadcast_to(centroid, pts.shape), pts, np.roll(pts, -1, axis=0)], axis=1)
        e1 = tris[:, 1] - tris[:, 0]
        e2 = tris[:, 2] - tris[:, 0]
        sub_areas = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        if np.any(sub_areas <= 0.0):
            raise GeometryError(f"element {e} is not star-shaped with respect to its centroid")

        fids = mesh.element_faces[e]
        flags = mesh.element_orientations[e]
        areas[e] = area
        centroids[e] = centroid
        diameters[e] = diameter
        element_geoms.append(ElementGeometry(
            index=e,
            vertices=pts,
            area=float(area),
            centroid=centroid,
            diameter=diameter,
            face_ids=fids,
            normals=normals[fids] * flags[:, None],
            faces=tuple(face_geoms[f] for f in fids),
            sub_triangles=tris,
        ))

    geometry = GeometryCache(
        mesh=mesh,
        element_area=areas,
        element_centroid=centroids,
        element_diameter=diameters,
        face_length=lengths,
        face_midpoint=midpoints,
        face_normal=normals,
        face_tangent=tangents,
        face_origin=origins,
        elements=tuple(element_geoms),
        h=float(diameters.max()),
    )
    logger.debug(f"Geometry computed: {n} elements, h = {geometry.h:.4e}")
    return geometry
