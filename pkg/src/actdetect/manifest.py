"""Reproducibility manifest written next to every command's output set."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

from .util import atomic_write_text, sha256_file, sha256_text

MANIFEST_NAME = "manifest.json"


def write_manifest(
    out_dir: Path | str,
    command: str,
    seed: int | None,
    tool_version: str,
    config_text: str | None = None,
    inputs: dict[str, Path | str] | None = None,
    outputs: dict[str, Path | str] | None = None,
) -> Path:
    """Hash the run's inputs/outputs and write `manifest.json` atomically.

    The manifest carries wall-clock timestamps and is therefore the one file
    excluded from byte-identity checks between reruns.
    """
    doc = {
        "command": command,
        "seed": seed,
        "tool_version": tool_version,
        "created_utc": datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
        "config_sha256": None if config_text is None else sha256_text(config_text),
        "inputs": {name: sha256_file(path) for name, path in (inputs or {}).items()},
        "outputs": {name: sha256_file(path) for name, path in (outputs or {}).items()},
    }
    path = Path(out_dir) / MANIFEST_NAME
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
