"""Deterministic CSV/JSON writers with embedded run metadata."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

import mfxcorr
from mfxcorr.synth import generator_identity


def run_metadata(command: str, config_meta: dict) -> dict:
    return {
        "tool": "mfxcorr",
        "version": mfxcorr.__version__,
        "numpy": np.__version__,
        "generator": generator_identity(),
        "command": command,
        "config": config_meta,
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path: Path, meta: dict, header: list[str], rows) -> Path:
    path = Path(path)
    lines = ["# " + json.dumps(_clean(meta), sort_keys=True, separators=(",", ":"))]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_json(path: Path, meta: dict, payload: dict) -> Path:
    path = Path(path)
    doc = {"meta": meta, **payload}
    path.write_text(json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Parse a file written by :func:`write_csv` back into (meta, header, rows)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    meta = json.loads(lines[0][2:])
    header = lines[1].split(",")
    return meta, header, [ln.split(",") for ln in lines[2:]]
