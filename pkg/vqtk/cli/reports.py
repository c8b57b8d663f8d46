"""Report and manifest writers shared by every command."""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from vqtk.errors import IoError
from vqtk.schemas import RunManifest

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class CommandResult(BaseModel):
    """What a command hands back to the CLI driver."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    report: Dict[str, Any]
    outputs: List[str] = Field(default_factory=list)
    manifest_path: Optional[Path] = None
    results: Dict[str, Any] = Field(default_factory=dict)  # extra manifest-only detail
    frame: Optional[pd.DataFrame] = None  # table behind --report


def _plain(value: Any) -> Any:
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def format_report(report: Dict[str, Any], as_json: bool) -> str:
    report = _plain(report)
    if as_json:
        return json.dumps(report, sort_keys=True)
    lines = []
    for key, value in report.items():
        if isinstance(value, (dict, list)):
            value = json.dumps(value, sort_keys=True)
        elif value is None:
            value = ""
        lines.append(f"{key}={value}")
    return "\n".join(lines)


def emit_report(report: Dict[str, Any], as_json: bool, stream: TextIO) -> None:
    stream.write(format_report(report, as_json) + "\n")


def write_csv(frame: pd.DataFrame, path: Path) -> None:
    try:
        frame.to_csv(path, index=False, float_format="%.17g")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e.strerror or e}") from e
    logger.info(f"Wrote {len(frame)} rows to {path}")


def manifest_for_file(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def manifest_for_dir(outdir: Path) -> Path:
    return outdir / MANIFEST_NAME


def write_manifest(manifest: RunManifest, path: Path) -> None:
    text = json.dumps(_plain(manifest.model_dump(mode="python")), sort_keys=True, indent=2)
    try:
        path.write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot write manifest {path}: {e.strerror or e}") from e
    logger.debug(f"Wrote manifest {path}")
