"""
Reader and writer for the "fvca-poly" plain-text polygonal mesh format.

Grammar (tokens are whitespace separated, '#' starts a comment that runs to
the end of the line, records may span lines):

    VERTICES <nv>
    <x> <y>                      nv records
    ELEMENTS <ne>
    <m> <v_1> ... <v_m>          ne records, 0-based, counterclockwise
    FACES <nf>                   optional section
    <a> <b>                      nf records, 0-based vertex pairs

Without a FACES section every element edge is a face. Nonmatching
interfaces are expressed by listing the hanging vertex in the loop of the
coarse element, which splits its side into several faces.
"""

import hashlib
import logging
import os
from typing import List, Optional, Tuple

from mesh.core import Mesh, build_mesh
from mesh.validation import validate_mesh
from utils.errors import MeshError, MeshParseError, MeshTopologyError

logger = logging.getLogger("hho_ch.mesh.reader")

SUPPORTED_FORMATS = ("fvca-poly",)


class _Tokens:
    """Token stream that remembers the line each token came from."""

    def __init__(self, text: str, path: str):
        self.path = path
        self.items: List[Tuple[str, int]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0]
            self.items.extend((tok, lineno) for tok in line.split())
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def line(self) -> Optional[int]:
        if self.pos < len(self.items):
            return self.items[self.pos][1]
        return self.items[-1][1] if self.items else None

    def next(self, what: str) -> str:
        if self.pos >= len(self.items):
            raise MeshParseError(f"unexpected end of file, expected {what}", line=self.line(), path=self.path)
        tok = self.items[self.pos][0]
        self.pos += 1
        return tok

    def integer(self, what: str) -> int:
        line = self.line()
        tok = self.next(what)
        try:
            return int(tok)
        except ValueError:
            raise MeshParseError(f"expected integer {what}, got '{tok}'", line=line, path=self.path)

    def real(self, what: str) -> float:
        line = self.line()
        tok = self.next(what)
        try:
            return float(tok)
        except ValueError:
            raise MeshParseError(f"expected number {what}, got '{tok}'", line=line, path=self.path)

    def keyword(self, name: str) -> None:
        line = self.line()
        tok = self.next(name)
        if tok.upper() != name:
            raise MeshParseError(f"expected section '{name}', got '{tok}'", line=line, path=self.path)


def parse_polygonal_mesh(text: str, path: str = "<string>") -> Tuple[list, list, Optional[list]]:
    """Parse fvca-poly text into (vertices, elements, faces or None)."""
    tokens = _Tokens(text, path)

    tokens.keyword("VERTICES")
    nv = tokens.integer("vertex count")
    if nv < 3:
        raise MeshParseError("a mesh needs at least three vertices", line=tokens.line(), path=path)
    vertices = [(tokens.real("x coordinate"), tokens.real("y coordinate")) for _ in range(nv)]

    tokens.keyword("ELEMENTS")
    ne = tokens.integer("element count")
    if ne < 1:
        raise MeshParseError("a mesh needs at least one element", line=tokens.line(), path=path)
    elements = []
    for e in range(ne):
        line = tokens.line()
        m = tokens.integer(f"vertex count of element {e}")
        if m < 3:
            raise MeshParseError(f"element {e} has {m} vertices", line=line, path=path)
        loop = [tokens.integer(f"vertex index of element {e}") for _ in range(m)]
        for v in loop:
            if not 0 <= v < nv:
                raise MeshParseError(f"element {e} references vertex {v} outside [0, {nv})", line=line, path=path)
        elements.append(loop)

    faces = None
    if tokens.peek() is not None:
        tokens.keyword("FACES")
        nf = tokens.integer("face count")
        faces = []
        for f in range(nf):
            line = tokens.line()
            a, b = tokens.integer(f"vertex of face {f}"), tokens.integer(f"vertex of face {f}")
            if not (0 <= a < nv and 0 <= b < nv) or a == b:
                raise MeshParseError(f"face {f} has invalid vertices ({a}, {b})", line=line, path=path)
            faces.append((a, b))
    if tokens.peek() is not None:
        raise MeshParseError(f"unexpected trailing token '{tokens.peek()}'", line=tokens.line(), path=path)
    return vertices, elements, faces


def read_polygonal_mesh(path: str, format: str = "fvca-poly") -> Mesh:
    """
    Read a polygonal mesh file and check its admissibility.

    Args:
        path: File to read
        format: Only "fvca-poly" is supported

    Returns:
        Admissible Mesh

    Raises:
        MeshParseError: syntax errors, with the line number
        MeshTopologyError: connectivity or orientation errors, naming the element
    """
    if format not in SUPPORTED_FORMATS:
        raise MeshError(f"unsupported mesh format '{format}', expected one of {SUPPORTED_FORMATS}")
    if not os.path.exists(path):
        raise MeshError(f"mesh file {path} not found")

    with open(path, 'r') as f:
        text = f.read()
    vertices, elements, faces = parse_polygonal_mesh(text, path)
    digest = hashlib.sha256(text.encode()).hexdigest()
    mesh = build_mesh(vertices, elements, faces, provenance={
        "source": "file", "path": os.path.abspath(path), "format": format, "sha256": digest})

    report = validate_mesh(mesh)
    if not report.is_admissible:
        first = report.issues[0]
        element = first.index if first.entity == "element" else _element_of_face(mesh, first)
        raise MeshTopologyError(f"{path}: {first.message} ({len(report)} issue(s) in total)", element=element)

    logger.info(f"Read {mesh.n_elements} elements and {mesh.n_faces} faces from {path}")
    return mesh


def _element_of_face(mesh: Mesh, issue) -> Optional[int]:
    if issue.entity != "face":
        return None
    left = int(mesh.face_elements[issue.index, 0])
    return left if left >= 0 else None


def write_polygonal_mesh(mesh: Mesh, path: str, include_faces: bool = True) -> str:
    """
    Write a mesh in fvca-poly format.

    Coordinates use 17 significant digits so that reading the file back
    reproduces them exactly.

    Args:
        mesh: Mesh to write
        path: Destination file
        include_faces: Also write the FACES section in mesh face order

    Returns:
        The path written
    """
    lines = ["# fvca-poly mesh", f"VERTICES {mesh.n_vertices}"]
    lines.extend(f"{x:.17g} {y:.17g}" for x, y in mesh.vertices)
    lines.append(f"ELEMENTS {mesh.n_elements}")
    lines.extend(" ".join(str(v) for v in (len(loop),) + tuple(loop)) for loop in mesh.elements)
    if include_faces:
        lines.append(f"FACES {mesh.n_faces}")
        lines.extend(f"{a} {b}" for a, b in mesh.faces)

    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    try:
        with open(path, 'w') as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise MeshError(f"cannot write mesh to {path}: {e}")
    logger.info(f"Wrote mesh with {mesh.n_elements} elements to {path}")
    return path
