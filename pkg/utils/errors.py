"""
Exception hierarchy for the HHO Cahn-Hilliard simulator.

Every error raised on purpose by the library derives from HHOError so the
CLI can report it in one line and exit with a non-zero status.
"""

from typing import Any, List, Optional


class HHOError(Exception):
    """Base class for all simulator errors."""


class MeshError(HHOError):
    """Problems with mesh construction or input."""


class MeshParseError(MeshError):
    """Malformed mesh file."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location += f"{path}"
        if line is not None:
            location += f":{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)


class MeshTopologyError(MeshError):
    """Connectivity that violates the admissibility rules."""

    def __init__(self, message: str, element: Optional[int] = None):
        self.element = element
        prefix = f"element {element}: " if element is not None else ""
        super().__init__(prefix + message)


class GeometryError(MeshError):
    """Degenerate geometric entity (zero area, zero length, not star-shaped)."""


class QuadratureError(HHOError):
    """Unsupported quadrature request."""


class ProjectionError(HHOError):
    """L2 projection failed, usually a singular local mass matrix."""


class LocalOperatorError(HHOError):
    """Failure while building the per-element operators."""

    def __init__(self, message: str, element: Optional[int] = None):
        self.element = element
        prefix = f"element {element}: " if element is not None else ""
        super().__init__(prefix + message)


class AssemblyError(HHOError):
    """Scatter indices inconsistent with the DOF map."""


class CondensationError(HHOError):
    """Singular cell block met during static condensation."""

    def __init__(self, message: str, element: Optional[int] = None):
        self.element = element
        prefix = f"element {element}: " if element is not None else ""
        super().__init__(prefix + message)


class NewtonConvergenceError(HHOError):
    """Newton iteration did not reach the tolerance."""

    def __init__(self, message: str, history: Optional[List[float]] = None, step: Optional[int] = None):
        self.history = list(history or [])
        self.step = step
        super().__init__(message)


class ConfigError(HHOError):
    """Invalid simulation configuration."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        parts = []
        if key is not None:
            parts.append(f"'{key}'")
        if line is not None:
            parts.append(f"line {line}")
        prefix = " ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class CheckpointError(HHOError):
    """Unreadable or incompatible checkpoint file."""

    def __init__(self, message: str, path: Any = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path is not None else message)


class OutputError(HHOError):
    """Output file could not be written."""

    def __init__(self, message: str, path: Any = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path is not None else message)
