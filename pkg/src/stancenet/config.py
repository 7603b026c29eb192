"""Run configuration and manifests.

Configuration comes from one JSON file with per-stage sections, overridable by
environment variables and then CLI flags (precedence: flags > env > file >
built-in default). Every stage writes a manifest beside its primary output
recording the resolved configuration hash, input digests, seeds, and timings;
with the mock backend, equal manifests (timings aside) imply byte-identical
outputs.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Mapping

from . import __version__
from .errors import ConfigError

ENV_PREFIX = "STANCENET"


def load_config_file(path: str | Path | None) -> dict:
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config file {path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    return raw


def resolve_option(
    flag_value: Any,
    section: str,
    key: str,
    file_config: Mapping,
    default: Any = None,
) -> Any:
    """Single-option precedence: explicit flag, then environment, then file."""
    if flag_value is not None:
        return flag_value
    env_name = f"{ENV_PREFIX}_{section}_{key}".upper().replace("-", "_")
    if env_name in os.environ:
        return os.environ[env_name]
    section_cfg = file_config.get(section, {})
    if isinstance(section_cfg, Mapping) and key in section_cfg:
        return section_cfg[key]
    return default


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def config_hash(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(
    output_path: str | Path,
    stage: str,
    resolved: Mapping,
    inputs: Mapping[str, str | Path],
    seeds: Mapping[str, int] | None = None,
    timings: Mapping[str, float] | None = None,
) -> Path:
    """Write <output>.manifest.json next to a stage output file."""
    manifest = {
        "tool": f"stancenet {__version__}",
        "stage": stage,
        "config_hash": config_hash(resolved),
        "config": dict(resolved),
        "inputs": {
            name: file_digest(path) for name, path in sorted(inputs.items()) if Path(path).exists()
        },
        "seeds": dict(seeds or {}),
        "timings": dict(timings or {}),
    }
    path = Path(f"{output_path}.manifest.json")
    path.write_text(json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
