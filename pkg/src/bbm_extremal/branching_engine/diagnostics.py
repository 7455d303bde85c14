"""Observables of simulated populations: maxima, extremal points, genealogy and paths.

Also holds snapshot persistence (CSV and a binary framing).
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..pointproc_stats import PointConfiguration
from .simulate import PopulationSnapshot

SQRT2 = math.sqrt(2.0)


class EmptyPopulationError(ValueError):
    pass


class GenealogyUnavailableError(ValueError):
    pass


def centering_m(t: float) -> float:
    """Bramson centering ``sqrt(2) t - 3/(2 sqrt 2) log t``."""
    if t <= 0:
        raise ValueError("centering needs t > 0")
    return SQRT2 * t - 1.5 / SQRT2 * math.log(t)


def max_displacement(snapshot: PopulationSnapshot) -> float:
    if snapshot.empty:
        raise EmptyPopulationError(f"empty population at t={snapshot.time} (replica {snapshot.replica})")
    return float(snapshot.positions.max())


def extremal_points(snapshot: PopulationSnapshot, center: float) -> PointConfiguration:
    if snapshot.empty:
        raise EmptyPopulationError(f"empty population at t={snapshot.time} (replica {snapshot.replica})")
    return PointConfiguration(snapshot.positions - center, "E_t")


def genealogical_distance(i: int, j: int, snapshot: PopulationSnapshot) -> float:
    """Time of the split that separated the lineages of ``i`` and ``j`` (``t`` if ``i == j``).

    With several starting particles, lineages from different roots never
    met and the distance is 0.
    """
    g = snapshot.genealogy
    if g is None:
        raise GenealogyUnavailableError("snapshot was simulated without record_genealogy")
    for p in (i, j):
        if int(p) not in set(snapshot.ids.tolist()):
            raise KeyError(f"particle {p} not alive at t={snapshot.time}")
    if i == j:
        return float(snapshot.time)
    ai = g.ancestry(i)
    seen = set(ai)
    aj = g.ancestry(j)
    common = next((p for p in aj if p in seen), None)
    if common is None:
        return 0.0
    # the lineages separate when the common ancestor dies, i.e. when its children are born
    child_i = ai[ai.index(common) - 1]
    return g.birth(child_i)


def entropic_envelope(s, t: float, alpha: float):
    """``(s/t) m(t) - e(s)`` with ``e(s) = s^alpha`` up to ``t/2`` and ``(t-s)^alpha`` after."""
    if not 0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or np.any(s_arr > t):
        raise ValueError("s must lie in [0, t]")
    e = np.where(s_arr <= t / 2, s_arr ** alpha, np.maximum(t - s_arr, 0.0) ** alpha)
    out = s_arr / t * centering_m(t) - e
    return float(out) if out.ndim == 0 else out


@dataclass
class EnvelopeReport:
    alpha: float
    window: tuple
    D: tuple
    particles: int
    crossing: int
    replicas_with_particles: int
    replicas_crossing: int

    @property
    def defined(self) -> bool:
        return self.particles > 0

    @property
    def fraction(self) -> float | None:
        """Particle fraction; ``None`` (undefined) if no particle lands in ``D``."""
        return self.crossing / self.particles if self.particles else None

    @property
    def replica_fraction(self) -> float | None:
        return self.replicas_crossing / self.replicas_with_particles if self.replicas_with_particles else None

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "window": list(self.window), "D": list(self.D),
                "particles": self.particles, "crossing": self.crossing, "fraction": self.fraction,
                "replica_fraction": self.replica_fraction, "defined": self.defined}


def envelope_crossing_fraction(snapshots: Sequence[PopulationSnapshot], alpha: float, window: tuple,
                               D: tuple = (-3.0, 3.0), envelope=None) -> EnvelopeReport:
    """Fraction of particles in ``D + m(t)`` whose checkpointed path reaches the envelope.

    Only checkpoints inside ``window`` are inspected, so this is a
    discrete-time proxy and under-counts continuous crossings.  ``envelope``
    overrides the curve (a callable of ``(s, t)``).
    """
    lo, hi = window
    crossing = particles = reps = reps_cross = 0
    for snap in snapshots:
        if snap.paths is None:
            raise ValueError("snapshots need recorded paths (record_paths=True)")
        t = snap.time
        cps = np.asarray(snap.path_times, dtype=float)
        sel = (cps > lo) & (cps < hi) & (cps > 0) & (cps < t)
        x = snap.positions - centering_m(t)
        land = (x >= D[0]) & (x <= D[1])
        n = int(land.sum())
        if n == 0:
            continue
        particles += n
        reps += 1
        if not sel.any():
            continue
        env = envelope(cps[sel], t) if envelope is not None else entropic_envelope(cps[sel], t, alpha)
        env = np.broadcast_to(np.asarray(env, dtype=float), (int(sel.sum()),))
        hit = np.any(snap.paths[land][:, sel] >= env, axis=1)
        crossing += int(hit.sum())
        reps_cross += int(hit.any())
    return EnvelopeReport(alpha, (lo, hi), tuple(D), particles, crossing, reps, reps_cross)


def overlap_fraction(snapshots: Sequence[PopulationSnapshot], window: tuple, D: tuple = (-3.0, 3.0),
                     max_particles: int = 200) -> dict:
    """Share of replicas with two particles in ``D + m(t)`` whose lineages split inside ``window``."""
    lo, hi = window
    reps = hits = 0
    q_values = []
    for snap in snapshots:
        x = snap.positions - centering_m(snap.time)
        ids = snap.ids[(x >= D[0]) & (x <= D[1])][:max_particles]
        if ids.size < 2:
            continue
        reps += 1
        qs = [genealogical_distance(int(a), int(b), snap) for k, a in enumerate(ids) for b in ids[k + 1:]]
        q_values.extend(qs)
        hits += any(lo < q < hi for q in qs)
    return {"window": [lo, hi], "D": list(D), "replicas_with_pairs": reps,
            "fraction": hits / reps if reps else None, "overlaps": q_values}


# persistence -------------------------------------------------------------

CSV_COLUMNS = ["replica", "time", "particle_id", "parent_id", "position"]
_MAGIC = b"BBMS"
_VERSION = 1
_HEAD = struct.Struct("<4sHQ")    # magic, version, snapshot count
_BLOCK = struct.Struct("<qdqq")   # replica, time, pruned_count, particle count


def write_snapshots_csv(snapshots: Sequence[PopulationSnapshot], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for s in snapshots:
            for pid, par, x in zip(s.ids, s.parent_ids, s.positions):
                w.writerow([s.replica, repr(float(s.time)), int(pid), int(par), repr(float(x))])


def read_snapshots_csv(path) -> list[PopulationSnapshot]:
    groups: dict = {}
    with open(path) as fh:
        for row in csv.DictReader(fh):
            key = (int(row["replica"]), float(row["time"]))
            groups.setdefault(key, []).append((int(row["particle_id"]), int(row["parent_id"]),
                                               float(row["position"])))
    out = []
    for (rep, t), rows in groups.items():
        ids, par, pos = (np.array(c) for c in zip(*rows))
        out.append(_snapshot(rep, t, ids, par, pos, 0))
    return out


def _snapshot(rep, t, ids, parents, pos, pruned) -> PopulationSnapshot:
    ids = np.asarray(ids, np.int64)
    return PopulationSnapshot(float(t), np.asarray(pos, float), ids, np.asarray(parents, np.int64),
                              np.full(ids.size, np.nan), np.zeros(ids.size, np.int16), int(rep),
                              pruned_count=int(pruned))


def write_snapshots_binary(snapshots: Sequence[PopulationSnapshot], path) -> None:
    """Header ``<4sHQ`` (b"BBMS", version, count), then per snapshot a block
    ``<qdqq`` (replica, time, pruned, n) followed by ``n`` int64 ids, ``n``
    int64 parent ids and ``n`` float64 positions, all little-endian."""
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_MAGIC, _VERSION, len(snapshots)))
        for s in snapshots:
            fh.write(_BLOCK.pack(int(s.replica), float(s.time), int(s.pruned_count), s.n))
            fh.write(np.asarray(s.ids, "<i8").tobytes())
            fh.write(np.asarray(s.parent_ids, "<i8").tobytes())
            fh.write(np.asarray(s.positions, "<f8").tobytes())


def read_snapshots_binary(path) -> list[PopulationSnapshot]:
    data = memoryview(open(path, "rb").read())
    magic, version, count = _HEAD.unpack_from(data, 0)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError("not a snapshot file or unsupported version")
    off = _HEAD.size
    out = []
    for _ in range(count):
        rep, t, pruned, n = _BLOCK.unpack_from(data, off)
        off += _BLOCK.size
        ids = np.frombuffer(data, "<i8", n, off); off += 8 * n
        par = np.frombuffer(data, "<i8", n, off); off += 8 * n
        pos = np.frombuffer(data, "<f8", n, off); off += 8 * n
        out.append(_snapshot(rep, t, ids.copy(), par.copy(), pos.copy(), pruned))
    return out
