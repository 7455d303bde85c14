"""CSV and JSON persistence for cluster pools and auxiliary samples."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..pointproc_stats import PointConfiguration
from .cluster import ClusterLawResult, ClusterSample


def _sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def write_cluster_pool(result: ClusterLawResult, path) -> None:
    """Rows ``(sample_id, point)``; the manifest holds the run parameters and overshoots."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "point"])
        for i, s in enumerate(result.samples):
            w.writerows([i, repr(float(p))] for p in s.gaps.points)
    meta = result.metadata()
    meta["overshoots"] = [float(o) for o in result.overshoots]
    _sidecar(path).write_text(json.dumps(meta, indent=2))


def read_cluster_pool(path) -> ClusterLawResult:
    meta = json.loads(_sidecar(path).read_text())
    n = meta["accepted"]
    pts: list[list[float]] = [[] for _ in range(n)]
    with open(path) as fh:
        for row in list(csv.reader(fh))[1:]:
            pts[int(row[0])].append(float(row[1]))
    offset = -meta["level"]
    samples = [ClusterSample(PointConfiguration(p, "D"), o, offset)
               for p, o in zip(pts, meta["overshoots"])]
    return ClusterLawResult(samples, meta["t"], meta["a"], meta["b"], meta["method"],
                            meta["trials"], meta["seed"])


def write_auxiliary_csv(samples, path, extra: dict | None = None) -> None:
    """Rows ``(sample_id, atom_id, point)`` of the assembled points; metadata in a sidecar."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sample_id", "atom_id", "point"])
        for s in samples:
            for k, (eta, o) in enumerate(zip(s.atoms.positions, s.offspring)):
                for p in s.shift + eta + o.points:
                    w.writerow([s.sample_id, k, repr(float(p))])
    meta = {"samples": len(samples), "t": samples[0].t if samples else None,
            "mode": samples[0].mode if samples else None,
            "level": samples[0].level if samples else None,
            "z_values": [s.z_value for s in samples],
            "atom_counts": [len(s.atoms) for s in samples], **(extra or {})}
    _sidecar(path).write_text(json.dumps(meta, indent=2))


def read_auxiliary_points(path) -> dict:
    """``sample_id -> sorted array`` of assembled points."""
    out: dict[int, list] = {}
    with open(path) as fh:
        for row in list(csv.reader(fh))[1:]:
            out.setdefault(int(row[0]), []).append(float(row[2]))
    return {k: np.sort(np.array(v)) for k, v in out.items()}
