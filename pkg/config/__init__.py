"""
Simulation configuration.

Configurations are YAML documents with one mapping per section:

    preset: peclet-sweep        # optional, loads config/presets/<name>.yml
    scale: desk                 # full | desk (desk values of the preset)
    physics:        {gamma, peclet}
    time:           {tau, t_final}
    discretization: {k, upwind_projection, orthonormalize, n_jobs,
                     initial_projection, initial_flux}
    mesh:           {generator, nx, ny, file, domain}
    velocity:       {name, params}
    initial_condition: {name, params, seed}
    newton:         {tolerance, max_iterations, condensation, linear_solver,
                     linear_tolerance, mass_constraint, line_search}
    output:         {snapshot_times, formats, directory, checkpoint_every, fine_vtk}
    sweep:          {peclet}

Values are merged in this order: preset full values, preset desk values
(scale: desk), the file's own sections, then command-line overrides of
the form section.key=value. Unknown sections or keys are rejected with
their line number.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, Optional, Tuple

import yaml
from dotenv import load_dotenv

from hho.local_operators import UPWIND_VARIANTS
from solver.initial_condition import PROJECTIONS
from solver.newton import LINEAR_SOLVERS, NewtonConfig
from utils.errors import ConfigError

logger = logging.getLogger("hho_ch.config")

CODE_VERSION = "1.0.0"
CONFIG_DIR = os.path.dirname(os.path.abspath(__file__))
PRESETS_DIR = os.path.join(CONFIG_DIR, "presets")
REPO_ROOT = os.path.dirname(CONFIG_DIR)
SCALES = ("full", "desk")
OUTPUT_FORMATS = ("vtk", "csv")
OUTPUT_ROOT_ENV = "HHO_OUTPUT_ROOT"

SECTION_KEYS = {
    "physics": ("gamma", "peclet"),
    "time": ("tau", "t_final"),
    "discretization": ("k", "upwind_projection", "orthonormalize", "n_jobs", "initial_projection",
                       "initial_flux"),
    "mesh": ("generator", "nx", "ny", "file", "domain"),
    "velocity": ("name", "params"),
    "initial_condition": ("name", "params", "seed"),
    "newton": ("tolerance", "max_iterations", "condensation", "linear_solver", "linear_tolerance",
               "mass_constraint", "line_search"),
    "output": ("snapshot_times", "formats", "directory", "checkpoint_every", "fine_vtk"),
    "sweep": ("peclet",),
}
TOP_LEVEL_KEYS = ("preset", "scale", "description") + tuple(SECTION_KEYS)


@dataclass(frozen=True)
class MeshSpec:
    generator: str = "cartesian"
    nx: int = 8
    ny: int = 8
    file: Optional[str] = None
    domain: Tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class FieldSpec:
    """Name and parameters of a velocity field or initial datum."""
    name: str
    params: Tuple[Tuple[str, Any], ...] = ()
    seed: Optional[int] = None

    @property
    def kwargs(self) -> Dict[str, Any]:
        return dict(self.params)


@dataclass(frozen=True)
class OutputPlan:
    snapshot_times: Optional[Tuple[float, ...]] = None
    formats: Tuple[str, ...] = ("vtk", "csv")
    directory: Optional[str] = None
    checkpoint_every: int = 0
    fine_vtk: bool = False


@dataclass(frozen=True)
class SimulationConfig:
    """Resolved configuration of one run."""
    gamma: float
    peclet: float
    tau: float
    t_final: float
    k: int = 0
    mesh: MeshSpec = MeshSpec()
    velocity: FieldSpec = FieldSpec("zero")
    initial_condition: FieldSpec = FieldSpec("constant", (("value", 0.0),))
    newton: NewtonConfig = NewtonConfig()
    output: OutputPlan = OutputPlan()
    upwind_projection: str = "exact"
    orthonormalize: bool = False
    n_jobs: int = 1
    initial_projection: str = "auto"
    initial_flux: bool = False
    sweep_peclet: Tuple[float, ...] = ()
    preset: Optional[str] = None
    scale: str = "full"

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.tau)))


# --- YAML with line numbers ------------------------------------------------

def _key_lines(text: str) -> Dict[str, int]:
    """Map 'key' and 'section.key' to the 1-based line where they appear."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(e, 'problem', e)}",
                          line=mark.line + 1 if mark is not None else None)
    lines: Dict[str, int] = {}
    if not isinstance(root, yaml.MappingNode):
        return lines
    for key_node, value_node in root.value:
        lines[key_node.value] = key_node.start_mark.line + 1
        if isinstance(value_node, yaml.MappingNode):
            for sub_key, _ in value_node.value:
                lines[f"{key_node.value}.{sub_key.value}"] = sub_key.start_mark.line + 1
    return lines


def _load_yaml(text: str, source: str = "<string>") -> Tuple[Dict[str, Any], Dict[str, int]]:
    lines = _key_lines(text)
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    return data, lines


def _check_keys(data: Dict[str, Any], lines: Dict[str, int]):
    for key, value in data.items():
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError("unknown section", key=key, line=lines.get(key))
        if key in SECTION_KEYS:
            if value is None:
                continue
            if not isinstance(value, dict):
                raise ConfigError("section must be a mapping", key=key, line=lines.get(key))
            for sub in value:
                if sub not in SECTION_KEYS[key]:
                    dotted = f"{key}.{sub}"
                    raise ConfigError("unknown key", key=dotted, line=lines.get(dotted))


def _merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in base.items()}
    for key, value in (extra or {}).items():
        if key in SECTION_KEYS and isinstance(value, dict):
            merged = dict(out.get(key) or {})
            merged.update(value)
            out[key] = merged
        else:
            out[key] = value
    return out


# --- presets -----------------------------------------------------------------

def preset_path(name: str) -> str:
    return os.path.join(PRESETS_DIR, f"{name.replace('-', '_')}.yml")


def list_presets() -> Tuple[str, ...]:
    if not os.path.isdir(PRESETS_DIR):
        return ()
    return tuple(sorted(f[:-4].replace('_', '-') for f in os.listdir(PRESETS_DIR) if f.endswith(".yml")))


def load_preset(name: str, scale: str = "full") -> Dict[str, Any]:
    """
    Raw sections of a preset at the requested scale.

    Raises:
        ConfigError: unknown preset or scale
    """
    if scale not in SCALES:
        raise ConfigError(f"scale must be one of {SCALES}", key="scale")
    path = preset_path(name)
    if not os.path.exists(path):
        raise ConfigError(f"unknown preset (available: {', '.join(list_presets())})", key=name)
    with open(path, 'r') as file:
        text = file.read()
    data, _ = _load_yaml(text, path)
    sections = dict(data.get("full") or {})
    if scale == "desk":
        sections = _merge(sections, data.get("desk") or {})
    sections["preset"] = name
    sections["scale"] = scale
    return sections


# --- validation ----------------------------------------------------------------

def _number(value, key: str, lines: Dict[str, int], kind=float):
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", key=key, line=lines.get(key))
    try:
        number = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", key=key, line=lines.get(key))
    if kind is int and float(value) != number:
        raise ConfigError(f"expected an integer, got {value!r}", key=key, line=lines.get(key))
    return number


def _positive(value, key: str, label: str, lines: Dict[str, int]) -> float:
    number = _number(value, key, lines)
    if not number > 0:
        raise ConfigError(f"{label} must be positive", key=key, line=lines.get(key))
    return number


def _flag(value, key: str, lines: Dict[str, int]) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"expected true or false, got {value!r}", key=key, line=lines.get(key))
    return value


def _field_spec(section: Dict[str, Any], name: str, lines: Dict[str, int], default: FieldSpec) -> FieldSpec:
    if not section:
        return default
    params = section.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping", key=f"{name}.params", line=lines.get(f"{name}.params"))
    seed = section.get("seed")
    if seed is not None:
        seed = _number(seed, f"{name}.seed", lines, int)
    clean = []
    for k, v in sorted(params.items()):
        if isinstance(v, list):
            v = tuple(float(x) for x in v)
        elif isinstance(v, (int, float)) and not isinstance(v, bool):
            v = float(v)
        elif isinstance(v, str):
            try:
                v = float(v)
            except ValueError:
                pass
        clean.append((str(k), v))
    return FieldSpec(name=str(section.get("name", default.name)), params=tuple(clean), seed=seed)


def build_config(data: Dict[str, Any], lines: Optional[Dict[str, int]] = None) -> SimulationConfig:
    """
    Validate merged sections and build a SimulationConfig.

    Raises:
        ConfigError: missing values, unknown keys or violated invariants
    """
    lines = lines or {}
    _check_keys(data, lines)
    physics = data.get("physics") or {}
    time = data.get("time") or {}
    disc = data.get("discretization") or {}
    mesh = data.get("mesh") or {}
    newton = data.get("newton") or {}
    output = data.get("output") or {}
    sweep = data.get("sweep") or {}

    for key in ("physics.gamma", "physics.peclet", "time.tau", "time.t_final"):
        section, sub = key.split(".")
        if (data.get(section) or {}).get(sub) is None:
            raise ConfigError("missing required value", key=key, line=lines.get(section))

    gamma = _positive(physics["gamma"], "physics.gamma", "gamma", lines)
    peclet = _positive(physics["peclet"], "physics.peclet", "Pe", lines)
    tau = _positive(time["tau"], "time.tau", "tau", lines)
    t_final = _positive(time["t_final"], "time.t_final", "t_final", lines)
    if t_final < tau:
        raise ConfigError("t_final must be at least tau", key="time.t_final", line=lines.get("time.t_final"))

    k = _number(disc.get("k", 0), "discretization.k", lines, int)
    if k < 0:
        raise ConfigError("k must be non-negative", key="discretization.k", line=lines.get("discretization.k"))
    upwind = disc.get("upwind_projection", "exact")
    if upwind not in UPWIND_VARIANTS:
        raise ConfigError(f"must be one of {UPWIND_VARIANTS}", key="discretization.upwind_projection",
                          line=lines.get("discretization.upwind_projection"))
    n_jobs = _number(disc.get("n_jobs", 1), "discretization.n_jobs", lines, int)
    initial_projection = disc.get("initial_projection", "auto")
    if initial_projection not in PROJECTIONS:
        raise ConfigError(f"must be one of {PROJECTIONS}", key="discretization.initial_projection",
                          line=lines.get("discretization.initial_projection"))

    domain = tuple(float(x) for x in mesh.get("domain", (0.0, 1.0, 0.0, 1.0)))
    if len(domain) != 4:
        raise ConfigError("domain must be [xmin, xmax, ymin, ymax]", key="mesh.domain", line=lines.get("mesh.domain"))
    mesh_spec = MeshSpec(
        generator=str(mesh.get("generator", "cartesian")),
        nx=_number(mesh.get("nx", 8), "mesh.nx", lines, int),
        ny=_number(mesh.get("ny", mesh.get("nx", 8)), "mesh.ny", lines, int),
        file=mesh.get("file"),
        domain=domain,
    )
    if mesh_spec.file is None and (mesh_spec.nx < 1 or mesh_spec.ny < 1):
        raise ConfigError("nx and ny must be at least 1", key="mesh.nx", line=lines.get("mesh.nx"))

    linear_solver = newton.get("linear_solver", "direct")
    if linear_solver not in LINEAR_SOLVERS:
        raise ConfigError(f"must be one of {LINEAR_SOLVERS}", key="newton.linear_solver",
                          line=lines.get("newton.linear_solver"))
    newton_config = NewtonConfig(
        tolerance=_positive(newton.get("tolerance", 1e-10), "newton.tolerance", "tolerance", lines),
        max_iterations=max(1, _number(newton.get("max_iterations", 25), "newton.max_iterations", lines, int)),
        condensation=_flag(newton.get("condensation", True), "newton.condensation", lines),
        linear_solver=linear_solver,
        linear_tolerance=_positive(newton.get("linear_tolerance", 1e-12), "newton.linear_tolerance",
                                   "linear_tolerance", lines),
        mass_constraint=_flag(newton.get("mass_constraint", True), "newton.mass_constraint", lines),
        line_search=_flag(newton.get("line_search", True), "newton.line_search", lines),
    )

    times = output.get("snapshot_times")
    if times is not None:
        times = tuple(sorted(_number(t, "output.snapshot_times", lines) for t in times))
    formats = tuple(output.get("formats", ("vtk", "csv")))
    for fmt in formats:
        if fmt not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown format '{fmt}'", key="output.formats", line=lines.get("output.formats"))
    plan = OutputPlan(
        snapshot_times=times,
        formats=formats,
        directory=output.get("directory"),
        checkpoint_every=_number(output.get("checkpoint_every", 0), "output.checkpoint_every", lines, int),
        fine_vtk=_flag(output.get("fine_vtk", False), "output.fine_vtk", lines),
    )

    sweep_peclet = tuple(_positive(p, "sweep.peclet", "Pe", lines) for p in (sweep.get("peclet") or ()))
    scale = data.get("scale", "full")
    if scale not in SCALES:
        raise ConfigError(f"must be one of {SCALES}", key="scale", line=lines.get("scale"))

    return SimulationConfig(
        gamma=gamma,
        peclet=peclet,
        tau=tau,
        t_final=t_final,
        k=k,
        mesh=mesh_spec,
        velocity=_field_spec(data.get("velocity"), "velocity", lines, FieldSpec("zero")),
        initial_condition=_field_spec(data.get("initial_condition"), "initial_condition", lines,
                                      FieldSpec("constant", (("value", 0.0),))),
        newton=newton_config,
        output=plan,
        upwind_projection=upwind,
        orthonormalize=_flag(disc.get("orthonormalize", False), "discretization.orthonormalize", lines),
        n_jobs=n_jobs,
        initial_projection=initial_projection,
        initial_flux=_flag(disc.get("initial_flux", False), "discretization.initial_flux", lines),
        sweep_peclet=sweep_peclet,
        preset=data.get("preset"),
        scale=scale,
    )


# --- overrides -----------------------------------------------------------------

def parse_override(item: str) -> Tuple[str, str, Any]:
    """Split 'section.key=value' and parse the value as YAML."""
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise ConfigError(f"override '{item}' must look like section.key=value")
    dotted, raw = item.split("=", 1)
    section, key = dotted.strip().split(".", 1)
    return section, key, yaml.safe_load(raw)


def apply_overrides(data: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    out = _merge(data, {})
    for item in overrides or ():
        section, key, value = parse_override(item)
        if section not in SECTION_KEYS:
            raise ConfigError("unknown section", key=section)
        if key not in SECTION_KEYS[section]:
            raise ConfigError("unknown key", key=f"{section}.{key}")
        merged = dict(out.get(section) or {})
        merged[key] = value
        out[section] = merged
    return out


# --- entry points ----------------------------------------------------------------

def resolve_sections(data: Dict[str, Any], lines: Optional[Dict[str, int]] = None,
                     overrides: Iterable[str] = ()) -> Dict[str, Any]:
    """Expand a preset reference and apply overrides, without validating."""
    lines = lines or {}
    _check_keys(data, lines)
    merged: Dict[str, Any] = {}
    if data.get("preset"):
        merged = load_preset(str(data["preset"]), str(data.get("scale", "full")))
    own = {k: v for k, v in data.items() if k != "description"}
    merged = _merge(merged, own)
    return apply_overrides(merged, overrides)


def parse_config_text(text: str, overrides: Iterable[str] = (), source: str = "<string>") -> SimulationConfig:
    data, lines = _load_yaml(text, source)
    return build_config(resolve_sections(data, lines, overrides), lines)


def parse_config(path: str, overrides: Iterable[str] = ()) -> SimulationConfig:
    """
    Load, merge and validate a configuration file.

    Args:
        path: YAML configuration file
        overrides: 'section.key=value' strings applied last

    Returns:
        SimulationConfig

    Raises:
        ConfigError: descriptive message with key and line
    """
    if not os.path.exists(path):
        raise ConfigError(f"configuration file not found: {path}")
    with open(path, 'r') as file:
        text = file.read()
    config = parse_config_text(text, overrides, source=path)
    logger.info(f"Loaded configuration from {path}")
    return config


def config_from_preset(name: str, scale: str = "desk", overrides: Iterable[str] = ()) -> SimulationConfig:
    return build_config(apply_overrides(load_preset(name, scale), overrides))


def serialize_config(config: SimulationConfig) -> Dict[str, Any]:
    """Nested plain dict that parse_config_text turns back into ``config``."""
    def field_section(spec: FieldSpec) -> Dict[str, Any]:
        section = {"name": spec.name,
                   "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in spec.params}}
        if spec.seed is not None:
            section["seed"] = spec.seed
        return section

    out = {
        "scale": config.scale,
        "physics": {"gamma": config.gamma, "peclet": config.peclet},
        "time": {"tau": config.tau, "t_final": config.t_final},
        "discretization": {"k": config.k, "upwind_projection": config.upwind_projection,
                           "orthonormalize": config.orthonormalize, "n_jobs": config.n_jobs,
                           "initial_projection": config.initial_projection,
                           "initial_flux": config.initial_flux},
        "mesh": {"generator": config.mesh.generator, "nx": config.mesh.nx, "ny": config.mesh.ny,
                 "file": config.mesh.file, "domain": list(config.mesh.domain)},
        "velocity": field_section(config.velocity),
        "initial_condition": field_section(config.initial_condition),
        "newton": {"tolerance": config.newton.tolerance, "max_iterations": config.newton.max_iterations,
                   "condensation": config.newton.condensation, "linear_solver": config.newton.linear_solver,
                   "linear_tolerance": config.newton.linear_tolerance,
                   "mass_constraint": config.newton.mass_constraint,
                   "line_search": config.newton.line_search},
        "output": {"snapshot_times": list(config.output.snapshot_times) if config.output.snapshot_times else None,
                   "formats": list(config.output.formats), "directory": config.output.directory,
                   "checkpoint_every": config.output.checkpoint_every, "fine_vtk": config.output.fine_vtk},
    }
    out["sweep"] = {"peclet": list(config.sweep_peclet)}
    if config.preset is not None:
        out = {"preset": config.preset, **out}
    return out


def dump_config(config: SimulationConfig) -> str:
    return yaml.safe_dump(serialize_config(config), sort_keys=False, default_flow_style=None)


def config_hash(config: SimulationConfig) -> str:
    """Short stable hash of the resolved configuration."""
    payload = json.dumps(serialize_config(config), sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def with_peclet(config: SimulationConfig, peclet: float) -> SimulationConfig:
    return replace(config, peclet=float(peclet))


def output_root() -> str:
    """Root directory of run outputs: $HHO_OUTPUT_ROOT (from .env if present) or config.json."""
    load_dotenv()
    root = os.getenv(OUTPUT_ROOT_ENV)
    if root:
        return root
    from utils.logger import load_logging_defaults
    return load_logging_defaults().get("output_root", "runs")
