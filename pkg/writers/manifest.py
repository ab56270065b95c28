"""
Run manifests and output directories.

Every run writes exactly one manifest.json into a directory named after
the hash of its resolved configuration, so concurrent runs with different
settings never share files.
"""

import json
import logging
import os
import platform as platform_info
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

import yaml

from config import CODE_VERSION, SimulationConfig, config_hash, parse_config_text, serialize_config
from utils.errors import OutputError

logger = logging.getLogger("hho_ch.writers.manifest")

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    config: Dict[str, Any]
    config_hash: str
    mesh_provenance: Dict[str, Any]
    code_version: str = CODE_VERSION
    seed: Optional[int] = None
    started_at: str = ""
    finished_at: str = ""
    platform: str = field(default_factory=platform_info.platform)
    python: str = field(default_factory=platform_info.python_version)
    outputs: List[str] = field(default_factory=list)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def build_manifest(config: SimulationConfig, mesh_provenance: Dict[str, Any]) -> RunManifest:
    return RunManifest(
        config=serialize_config(config),
        config_hash=config_hash(config),
        mesh_provenance=dict(mesh_provenance),
        seed=config.initial_condition.seed,
        started_at=_now(),
    )


def run_directory(config: SimulationConfig, root: str) -> str:
    """<root>/<preset or 'run'>-<config hash>"""
    name = f"{config.preset or 'run'}-{config_hash(config)}"
    return os.path.join(root, name)


def write_manifest(manifest: RunManifest, directory: str) -> str:
    manifest.finished_at = manifest.finished_at or _now()
    path = os.path.join(directory, MANIFEST_NAME)
    try:
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(asdict(manifest), f, indent=2, default=str)
    except OSError as e:
        raise OutputError(f"cannot write manifest: {e}", path=path)
    logger.info(f"Manifest written to {path}")
    return path


def load_manifest(path: str) -> RunManifest:
    with open(path, 'r') as f:
        data = json.load(f)
    return RunManifest(**data)


def config_from_manifest(path: str) -> SimulationConfig:
    """Resolved configuration recorded in a manifest, for re-running."""
    manifest = load_manifest(path)
    return parse_config_text(yaml.safe_dump(manifest.config, sort_keys=False), source=path)
