"""Small helpers for deterministic plot-ready output."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def stable_hash(*objs):
    """Short sha256 over a canonical JSON rendering of dataclasses/dicts/arrays."""
    blob = json.dumps([_plain(o) for o in objs], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def write_csv(path, columns, comments=()):
    """Write named columns (``{"name_unit": array}``) with optional ``#`` comment lines."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    lengths = {len(d) for d in data}
    if len(lengths) > 1:
        raise ValueError(f"column lengths differ: {lengths}")
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(names))
    for row in zip(*data):
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: returns (comments, {name: float array})."""
    comments, rows, header = [], [], None
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            comments.append(line[1:].strip())
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    return comments, {name: arr[:, i] for i, name in enumerate(header)}


def write_json(path, record):
    path = Path(path)
    path.write_text(json.dumps(_plain(record), indent=2, sort_keys=True, allow_nan=True) + "\n")
    return path
