"""JSON reports: construction, canonical serialization and schema validation."""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

__all__ = ["SCHEMA_VERSION", "VOLATILE_FIELDS", "make_report", "dumps", "load_schema", "strip_volatile"]

SCHEMA_VERSION = "1.0"
# fields that legitimately differ between otherwise identical runs
VOLATILE_FIELDS = ("wall_clock_seconds",)


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON types; NaN becomes null."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def make_report(command: str, config: dict, result: dict, seed: int, wall_clock: float) -> dict:
    return _plain(
        {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": config,
            "seed": seed,
            "result": result,
            "wall_clock_seconds": wall_clock,
        }
    )


def dumps(report: dict) -> str:
    """Canonical text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_volatile(report: dict) -> dict:
    return {k: v for k, v in report.items() if k not in VOLATILE_FIELDS}


def load_schema() -> dict:
    text = resources.files("matcpd").joinpath("schemas/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
