"""Polygonal meshes: construction, file I/O, geometry and validation."""

from mesh.core import (BOUNDARY, ElementGeometry, FaceGeometry, GeometryCache, Mesh,
                       build_mesh, compute_geometry, signed_area)
from mesh.generators import (UNIT_SQUARE, generate_cartesian_mesh, generate_honeycomb_mesh,
                             generate_triangular_mesh)
from mesh.reader import parse_polygonal_mesh, read_polygonal_mesh, write_polygonal_mesh
from mesh.validation import MeshIssue, MeshReport, validate_mesh

MESH_GENERATORS = {
    "cartesian": generate_cartesian_mesh,
    "triangular": generate_triangular_mesh,
    "honeycomb": generate_honeycomb_mesh,
}


def get_mesh_generator(name: str):
    """Get mesh generator function by name."""
    if name not in MESH_GENERATORS:
        raise ValueError(f"Mesh generator '{name}' not found")
    return MESH_GENERATORS[name]
