"""Derivative martingale, its additive companion and empirical samples of the limit Z."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .branching_engine import BranchingLaw, PopulationSnapshot, SimConfig, simulate_batch

SQRT2 = math.sqrt(2.0)
REJECTION_WARN = 0.10


def _positions(snapshot) -> tuple[float, np.ndarray]:
    return float(snapshot.time), np.asarray(snapshot.positions, dtype=float)


def derivative_martingale_at(t: float, positions) -> float:
    """``sum (sqrt2 t - x) exp(-sqrt2 (sqrt2 t - x))``."""
    d = SQRT2 * t - np.asarray(positions, dtype=float)
    return float(np.sum(d * np.exp(-SQRT2 * d)))


def additive_companion_at(t: float, positions) -> float:
    """``sum exp(-sqrt2 (sqrt2 t - x))``."""
    d = SQRT2 * t - np.asarray(positions, dtype=float)
    return float(np.sum(np.exp(-SQRT2 * d)))


def derivative_martingale(snapshot: PopulationSnapshot) -> float:
    return derivative_martingale_at(*_positions(snapshot))


def additive_companion(snapshot: PopulationSnapshot) -> float:
    return additive_companion_at(*_positions(snapshot))


@dataclass(frozen=True)
class MartingaleSample:
    time: float
    z_value: float
    w_value: float
    replica: int

    def __post_init__(self):
        if self.w_value < 0:
            raise ValueError("the additive companion is non-negative")


def martingale_sample(snapshot: PopulationSnapshot) -> MartingaleSample:
    t, x = _positions(snapshot)
    return MartingaleSample(t, derivative_martingale_at(t, x), additive_companion_at(t, x),
                            int(snapshot.replica))


@dataclass(frozen=True)
class ZEmpirical:
    """Positive finite-horizon proxies of the limit Z."""

    samples: np.ndarray
    horizon_used: float
    replica_count: int
    rejected: int = 0
    seed: int | None = None
    stability: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if np.any(s <= 0):
            raise ValueError("Z samples must be positive")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def rejection_rate(self) -> float:
        return self.rejected / self.replica_count if self.replica_count else 0.0

    def metadata(self) -> dict:
        return {"horizon": self.horizon_used, "replica_count": self.replica_count,
                "accepted": int(self.samples.size), "rejected": self.rejected,
                "rejection_rate": self.rejection_rate, "seed": self.seed, **self.stability}

    def to_csv(self, path) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["z"])
            w.writerows([[repr(float(z))] for z in self.samples])
        path.with_suffix(".json").write_text(json.dumps(self.metadata(), indent=2))

    @classmethod
    def from_csv(cls, path) -> "ZEmpirical":
        path = Path(path)
        with open(path) as fh:
            rows = list(csv.reader(fh))[1:]
        meta = json.loads(path.with_suffix(".json").read_text())
        extra = {k: v for k, v in meta.items()
                 if k not in ("horizon", "replica_count", "accepted", "rejected", "rejection_rate", "seed")}
        return cls(np.array([float(r[0]) for r in rows]), meta["horizon"], meta["replica_count"],
                   meta["rejected"], meta["seed"], extra)


def martingale_values(horizon: float, replicas: int, seed: int = 0, prune_gap: float | None = 8.0,
                      law: BranchingLaw | None = None, first_replica: int = 0,
                      checkpoints: tuple = ()) -> np.ndarray:
    """``(replicas, n_checkpoints, 2)`` array of ``(Z(t), W(t))``."""
    law = law or BranchingLaw.binary()
    cfg = SimConfig(horizon=horizon, seed=seed, prune_gap=prune_gap, checkpoint_times=checkpoints)

    def red(s):
        return (derivative_martingale_at(s.time, s.positions), additive_companion_at(s.time, s.positions))

    res = simulate_batch(cfg, law, replicas, first_replica, reduce=red)
    return np.asarray(res, dtype=float).reshape(replicas, len(cfg.checkpoints), 2)


def sample_limiting_Z(horizon: float = 10.0, replicas: int = 1000, seed: int = 0,
                      prune_gap: float | None = 8.0, law: BranchingLaw | None = None,
                      compare_horizon: float | None = None) -> ZEmpirical:
    """One ``Z(horizon)`` per replica; non-positive values are rejected and counted.

    With ``compare_horizon`` the same replicas (same seeds, hence the same
    trees up to the earlier time) are also evaluated at that time, and the
    median relative drift ``|Z(t2) - Z(t1)| / |Z(t1)|`` is reported.
    """
    if replicas == 0:
        return ZEmpirical(np.zeros(0), horizon, 0, 0, seed)
    cps = z_checkpoints(horizon, compare_horizon)
    vals = martingale_values(max(cps), replicas, seed, prune_gap, law, checkpoints=cps)
    return z_empirical_from_values(vals, horizon, compare_horizon, seed)


def z_checkpoints(horizon: float, compare_horizon: float | None = None) -> tuple:
    return (horizon,) if compare_horizon is None else tuple(sorted({horizon, compare_horizon}))


def z_empirical_from_values(vals: np.ndarray, horizon: float, compare_horizon: float | None = None,
                            seed: int | None = None) -> ZEmpirical:
    """Build a :class:`ZEmpirical` from :func:`martingale_values` output."""
    cps = z_checkpoints(horizon, compare_horizon)
    replicas = vals.shape[0]
    if replicas == 0:
        return ZEmpirical(np.zeros(0), horizon, 0, 0, seed)
    zi = cps.index(horizon)
    z = vals[:, zi, 0]
    keep = z > 0
    rejected = int((~keep).sum())
    stab = {}
    if compare_horizon is not None and len(cps) == 2:
        other = vals[:, 1 - zi, 0]
        both = (z > 0) & (other > 0)
        z1, z2 = (z, other) if horizon < compare_horizon else (other, z)
        rel = np.abs(z2[both] - z1[both]) / np.abs(z1[both])
        stab = {"compare_horizon": compare_horizon,
                "median_relative_drift": float(np.median(rel)) if rel.size else float("nan"),
                "mean_abs_drift": float(np.mean(np.abs(z2[both] - z1[both]))) if rel.size else float("nan")}
    out = ZEmpirical(z[keep], horizon, replicas, rejected, seed, stab)
    if out.rejection_rate > REJECTION_WARN:
        warnings.warn(f"{out.rejection_rate:.1%} of Z({horizon}) values are non-positive; "
                      "the horizon is too small", stacklevel=2)
    return out


def write_martingale_csv(samples: list[MartingaleSample], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replica", "time", "z_value", "w_value"])
        for s in samples:
            w.writerow([s.replica, repr(s.time), repr(s.z_value), repr(s.w_value)])
