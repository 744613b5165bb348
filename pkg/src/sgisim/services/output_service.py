"""
Service for writing result files.
CSV tables with '#' metadata headers, JSON sidecars and the run manifest.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .. import __version__
from ..models.manifest import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def format_value(value: Any) -> str:
    """Render one CSV cell; floats use a fixed 10-significant-digit form."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write a CSV file with '#'-prefixed metadata lines before the header.

    Args:
        path: Target file
        columns: Column names, unit suffixes included
        rows: Row values in output order
        metadata: Key/value pairs for the header comments

    Returns:
        The written path
    """
    path = Path(path)
    lines = [f"# {key}: {format_value(value)}" for key, value in (metadata or {}).items()]
    lines.append(",".join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"Row has {len(row)} values, expected {len(columns)}")
        lines.append(",".join(format_value(value) for value in row))

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug(f"Wrote {len(lines)} lines to {path}")
    return path


class OutputService:
    """Service class for run output files and the manifest."""

    def __init__(
        self,
        output_dir: Path,
        command: str,
        config_hash: str,
        seed: int,
        config_path: Optional[str] = None,
    ):
        """
        Initialize OutputService.

        Args:
            output_dir: Directory receiving all files of the run
            command: CLI subcommand that produced the run
            config_hash: SHA-256 of the canonical configuration
            seed: Master seed of the run
            config_path: Configuration file, if any
        """
        self.output_dir = Path(output_dir)
        self.command = command
        self.config_hash = config_hash
        self.seed = seed
        self.config_path = config_path
        self.files: List[str] = []

    def metadata(self, **extra: Any) -> Dict[str, Any]:
        items = {
            "tool_version": __version__,
            "command": self.command,
            "config_hash": self.config_hash,
            "seed": self.seed,
        }
        items.update(extra)
        return items

    def _register(self, path: Path) -> Path:
        name = path.relative_to(self.output_dir).as_posix()
        if name not in self.files:
            self.files.append(name)
        return path

    def write_csv(
        self,
        name: str,
        columns: Sequence[str],
        rows: Iterable[Sequence[Any]],
        **extra: Any,
    ) -> Path:
        """Write a CSV into the output directory with the run metadata header."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = write_csv(self.output_dir / name, columns, rows, self.metadata(**extra))
        logger.info(f"Wrote {path.name}")
        return self._register(path)

    def write_json(self, name: str, payload: Any) -> Path:
        """Write a JSON sidecar with sorted keys."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / name
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
        logger.info(f"Wrote {path.name}")
        return self._register(path)

    def register(self, path: Path) -> Path:
        """Record a file written by another service."""
        return self._register(Path(path))

    def write_manifest(self, duration_s: float, failed_scenarios: Optional[List[str]] = None) -> Path:
        """Write manifest.json listing every file of the run."""
        manifest = RunManifest(
            command=self.command,
            config_path=self.config_path,
            seed=self.seed,
            output_dir=str(self.output_dir),
            tool_version=__version__,
            config_hash=self.config_hash,
            files=sorted(self.files),
            failed_scenarios=list(failed_scenarios or []),
            duration_s=round(duration_s, 3),
        )
        self.output_dir.mkdir(parents=True, exist_ok=True)
        path = self.output_dir / MANIFEST_NAME
        with open(path, "w", encoding="utf-8") as f:
            f.write(manifest.to_json(indent=2, sort_keys=True))
        logger.info(f"Manifest written with {len(manifest.files)} files")
        return path
