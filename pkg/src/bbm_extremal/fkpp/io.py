"""CSV tables with JSON sidecars for fields, profiles and constants."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .solver import SolutionField
from .waves import WaveProfile


def _sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def _write_columns(path, header, columns) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([repr(float(v)) for v in row])


def _read_columns(path) -> tuple[list, np.ndarray]:
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0]))


def write_field(field: SolutionField, path, grid=None, scheme: str = "strang-crank-nicolson") -> None:
    """Columns ``(x, value)`` in the field's frame and convention."""
    _write_columns(path, ["x", "value"], [field.x, field.values])
    meta = {"time": field.time, "frame": field.frame, "convention": field.convention,
            "scheme": scheme, "grid": grid.to_dict() if grid is not None else None, **field.meta}
    _sidecar(path).write_text(json.dumps(meta, indent=2, default=str))


def read_field(path) -> SolutionField:
    _, data = _read_columns(path)
    meta = json.loads(_sidecar(path).read_text())
    extra = {k: v for k, v in meta.items() if k not in ("time", "frame", "convention")}
    return SolutionField(meta["time"], data[:, 0], data[:, 1], meta["frame"], meta["convention"], extra)


def write_profile(profile: WaveProfile, path, extra: dict | None = None) -> None:
    """Columns ``(x, value, tail)`` with ``tail = 1 - omega`` kept at full precision."""
    _write_columns(path, ["x", "value", "tail"], [profile.x, profile.values, profile.tail])
    meta = {"centering": profile.centering, "time": profile.time, "discrepancy": profile.discrepancy,
            "shift": profile.shift, **profile.meta, **(extra or {})}
    _sidecar(path).write_text(json.dumps(meta, indent=2, default=float))


def read_profile(path) -> WaveProfile:
    _, data = _read_columns(path)
    meta = json.loads(_sidecar(path).read_text())
    rest = {k: v for k, v in meta.items() if k not in ("centering", "time", "discrepancy", "shift")}
    return WaveProfile(data[:, 0], data[:, 1], data[:, 2], meta["centering"], meta["time"],
                       meta["discrepancy"], meta["shift"], rest)


def write_record(record, path) -> None:
    """JSON record of anything with ``to_dict`` (e.g. a Laplace constant)."""
    data = record.to_dict() if hasattr(record, "to_dict") else record
    Path(path).write_text(json.dumps(data, indent=2, default=float))
