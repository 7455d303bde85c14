"""Public simulation interface: configuration, snapshots and batch runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import rng
from .core import (Population, SliceRecord, advance_slice, expected_log_population,
                   prune, slice_boundaries)
from .law import BranchingLaw

DEFAULT_CAP = 10_000_000
MIN_PRUNE_GAP = 4.0
_START_SALT = 0x5EED


@dataclass(frozen=True)
class Particle:
    id: int
    position: float
    birth_time: float
    parent_id: int | None


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    drift: float = 0.0
    prune_gap: float | None = None
    population_cap: int | None = DEFAULT_CAP
    checkpoint_times: tuple = ()
    seed: int = 0
    record_genealogy: bool = False
    record_paths: bool = False
    starts: tuple = (0.0,)
    slice_dt: float = 0.5

    def __post_init__(self):
        if not self.horizon >= 0 or not math.isfinite(self.horizon):
            raise ValueError("horizon must be a finite non-negative number")
        if self.prune_gap is not None and self.prune_gap < MIN_PRUNE_GAP:
            raise ValueError(f"prune_gap must be at least {MIN_PRUNE_GAP}")
        cps = tuple(float(c) for c in self.checkpoint_times)
        if any(b < a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoint_times must be sorted")
        if cps and (cps[0] < 0 or cps[-1] > self.horizon):
            raise ValueError("checkpoint_times must lie in [0, horizon]")
        if self.population_cap is not None and self.population_cap < 1:
            raise ValueError("population_cap must be positive")
        if not self.starts:
            raise ValueError("need at least one starting particle")
        if self.slice_dt <= 0:
            raise ValueError("slice_dt must be positive")
        object.__setattr__(self, "checkpoint_times", cps)
        object.__setattr__(self, "starts", tuple(float(s) for s in self.starts))

    @property
    def checkpoints(self) -> tuple:
        return self.checkpoint_times or (float(self.horizon),)

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "drift": self.drift, "prune_gap": self.prune_gap,
                "population_cap": self.population_cap, "checkpoint_times": list(self.checkpoints),
                "seed": self.seed, "record_genealogy": self.record_genealogy,
                "record_paths": self.record_paths, "starts": list(self.starts),
                "slice_dt": self.slice_dt}


@dataclass(frozen=True)
class Genealogy:
    """Every particle ever born in one replica: id, parent id (-1 for roots), birth time."""

    ids: np.ndarray
    parents: np.ndarray
    births: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_index", {int(i): n for n, i in enumerate(self.ids)})

    def parent(self, pid: int) -> int | None:
        p = int(self.parents[self._index[int(pid)]])
        return None if p < 0 else p

    def birth(self, pid: int) -> float:
        return float(self.births[self._index[int(pid)]])

    def __contains__(self, pid) -> bool:
        return int(pid) in self._index

    def ancestry(self, pid: int) -> list[int]:
        """``[pid, parent, grandparent, ..., root]``."""
        chain = [int(pid)]
        while True:
            p = self.parent(chain[-1])
            if p is None:
                return chain
            chain.append(p)


@dataclass(frozen=True, eq=False)
class PopulationSnapshot:
    """State of one replica at ``time``; particle arrays are sorted by id."""

    time: float
    positions: np.ndarray
    ids: np.ndarray
    parent_ids: np.ndarray
    birth_times: np.ndarray
    roots: np.ndarray
    replica: int = 0
    genealogy: Genealogy | None = None
    pruned_count: int = 0
    aborted: bool = False
    paths: np.ndarray | None = None
    path_times: tuple = ()
    split_counts: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.positions.size)

    @property
    def empty(self) -> bool:
        return self.n == 0

    @property
    def annihilated(self) -> bool:
        """Empty because of the population cap or pruning."""
        return self.empty

    @property
    def particles(self) -> list[Particle]:
        return [Particle(int(i), float(x), float(b), None if p < 0 else int(p))
                for i, x, b, p in zip(self.ids, self.positions, self.birth_times, self.parent_ids)]

    def position_of(self, pid: int) -> float:
        k = np.searchsorted(self.ids, pid)
        if k >= self.ids.size or self.ids[k] != pid:
            raise KeyError(f"particle {pid} not alive at t={self.time}")
        return float(self.positions[k])


def single_particle_snapshot(position: float = 0.0, time: float = 0.0) -> PopulationSnapshot:
    return PopulationSnapshot(time, np.array([position]), np.array([0]), np.array([-1]),
                              np.array([0.0]), np.array([0], np.int16))


def _root_population(config: SimConfig, replicas: np.ndarray, n_path: int | None) -> Population:
    base = rng.root_keys(config.seed, replicas)
    S = len(config.starts)
    n = replicas.size * S
    rep_local = np.repeat(np.arange(replicas.size), S)
    j = np.tile(np.arange(S), replicas.size)
    keys = np.repeat(base, S)
    others = j > 0
    if others.any():
        keys[others] = rng.child_keys(keys[others], j[others] + _START_SALT)
    return Population(rep_local.astype(np.int64), np.tile(np.array(config.starts), replicas.size),
                      keys, j.astype(np.int64), j.astype(np.int16), np.zeros(n),
                      None if n_path is None else np.full((n, n_path), np.nan))


def _parents_of(ids, gen_ids, gen_parents):
    order = np.argsort(gen_ids)
    pos = np.searchsorted(gen_ids, ids, sorter=order)
    return gen_parents[order[pos]]


def _run_chunk(config: SimConfig, law: BranchingLaw, replicas: np.ndarray, reduce: Callable | None):
    R = replicas.size
    cps = list(config.checkpoints)
    n_path = len(cps) if config.record_paths else None
    pop = _root_population(config, replicas, n_path)
    S = len(config.starts)
    next_pid = np.full(R, S, dtype=np.int64)
    pruned = np.zeros(R, dtype=np.int64)
    aborted = np.zeros(R, dtype=bool)
    frozen: dict[int, PopulationSnapshot] = {}
    record = SliceRecord([], [], [], [], [], [], keep_births=config.record_genealogy)
    gen_parts = [(np.repeat(np.arange(R), S), np.tile(np.arange(S), R), np.full(R * S, -1),
                  np.zeros(R * S))]
    max_k = law.max_offspring
    splits = np.zeros((R, max_k + 1), dtype=np.int64)
    out: list[list] = [[] for _ in range(R)]
    bounds = slice_boundaries(config.horizon, cps, config.slice_dt)
    cp_index = {float(c): i for i, c in enumerate(cps)}

    def snapshot(t: float):
        ci = cp_index.get(float(t))
        if config.record_paths and len(pop):
            pop.path[:, ci] = pop.pos
        if config.record_genealogy and record.births_rep:
            gen_parts.append((np.concatenate(record.births_rep), np.concatenate(record.births_pid),
                              np.concatenate(record.births_parent), np.concatenate(record.births_time)))
            record.births_rep.clear(); record.births_pid.clear()
            record.births_parent.clear(); record.births_time.clear()
        if record.split_k:
            ks = np.concatenate(record.split_k)
            rs = np.concatenate(record.split_rep)
            np.add.at(splits, (rs, ks), 1)
            record.split_k.clear(); record.split_rep.clear()
        order = np.lexsort((pop.pid, pop.rep))
        rep_sorted = pop.rep[order]
        cuts = np.searchsorted(rep_sorted, np.arange(R + 1))
        if config.record_genealogy:
            g_rep = np.concatenate([g[0] for g in gen_parts])
            g_pid = np.concatenate([g[1] for g in gen_parts])
            g_par = np.concatenate([g[2] for g in gen_parts])
            g_bt = np.concatenate([g[3] for g in gen_parts])
            g_order = np.lexsort((g_pid, g_rep))
            g_rep, g_pid, g_par, g_bt = g_rep[g_order], g_pid[g_order], g_par[g_order], g_bt[g_order]
            g_cuts = np.searchsorted(g_rep, np.arange(R + 1))
        for r in range(R):
            if aborted[r] and r in frozen:
                snap = frozen[r]
            else:
                sl = order[cuts[r]:cuts[r + 1]]
                gen = None
                parents = np.full(sl.size, -1, dtype=np.int64)
                if config.record_genealogy:
                    gs = slice(g_cuts[r], g_cuts[r + 1])
                    gen = Genealogy(g_pid[gs], g_par[gs], g_bt[gs])
                    if sl.size:
                        parents = _parents_of(pop.pid[sl], g_pid[gs], g_par[gs])
                sc = {int(k): int(v) for k, v in enumerate(splits[r]) if v}
                snap = PopulationSnapshot(
                    float(t), pop.pos[sl].copy(), pop.pid[sl].copy(), parents, pop.birth[sl].copy(),
                    pop.root[sl].copy(), int(replicas[r]), gen, int(pruned[r]), bool(aborted[r]),
                    None if not config.record_paths else pop.path[sl, :ci + 1].copy(),
                    tuple(cps[:ci + 1]) if config.record_paths else (), sc)
            out[r].append(reduce(snap) if reduce is not None else snap)

    if 0.0 in cp_index:
        snapshot(0.0)
    for j in range(len(bounds) - 1):
        a, b = float(bounds[j]), float(bounds[j + 1])
        pop = advance_slice(pop, a, b, j, law, config.drift, next_pid, record)
        if config.prune_gap is not None:
            pop = prune(pop, R, config.prune_gap, pruned)
        if config.population_cap is not None and len(pop):
            counts = np.bincount(pop.rep, minlength=R)
            over = (counts > config.population_cap) & ~aborted
            if over.any():
                for r in np.flatnonzero(over):
                    aborted[r] = True
                # drop the aborted replicas' particles; their snapshots are flagged partial
                keep = ~aborted[pop.rep]
                dropped = pop.take(np.flatnonzero(~keep))
                for r in np.flatnonzero(over):
                    sel = np.flatnonzero(dropped.rep == r)
                    sel = sel[np.argsort(dropped.pid[sel])]
                    frozen[int(r)] = PopulationSnapshot(
                        b, dropped.pos[sel], dropped.pid[sel], np.full(sel.size, -1, np.int64),
                        dropped.birth[sel], dropped.root[sel], int(replicas[r]), None,
                        int(pruned[r]), True)
                pop = pop.take(np.flatnonzero(keep))
        if b in cp_index:
            snapshot(b)
    return out


def _default_chunk(config: SimConfig, replicas: int) -> int:
    logpop = expected_log_population(config.horizon, config.prune_gap)
    est = math.exp(min(logpop, 16.0)) * len(config.starts)
    return int(max(1, min(replicas, 4096, 6e5 / est)))


def simulate_batch(config: SimConfig, law: BranchingLaw, replicas: int, first_replica: int = 0,
                   reduce: Callable | None = None, chunk: int | None = None) -> list[list]:
    """Run replicas ``first_replica, ..., first_replica + replicas - 1``.

    Returns one list per replica with an entry per checkpoint: the snapshot,
    or ``reduce(snapshot)`` when a reducer is given.  Results do not depend on
    ``chunk``.
    """
    if replicas < 0:
        raise ValueError("replicas must be non-negative")
    chunk = chunk or _default_chunk(config, replicas)
    out: list[list] = []
    for lo in range(0, replicas, chunk):
        ids = np.arange(first_replica + lo, first_replica + min(lo + chunk, replicas), dtype=np.int64)
        out.extend(_run_chunk(config, law, ids, reduce))
    return out



def simulate_final(config: SimConfig, law: BranchingLaw, replicas: int, first_replica: int = 0,
                   reduce: Callable | None = None, chunk: int | None = None) -> list:
    """Last-checkpoint result for each replica."""
    return [r[-1] for r in simulate_batch(config, law, replicas, first_replica, reduce, chunk)]


def simulate(config: SimConfig, law: BranchingLaw, replica: int = 0) -> list[PopulationSnapshot]:
    """One replica; one snapshot per checkpoint (default: the horizon)."""
    return simulate_batch(config, law, 1, replica)[0]


def simulate_ids(config: SimConfig, law: BranchingLaw, ids, reduce: Callable | None = None,
                 chunk: int | None = None) -> list:
    """Last-checkpoint result for arbitrary (non-contiguous) replica ids."""
    ids = np.asarray(ids, dtype=np.int64).ravel()
    chunk = chunk or _default_chunk(config, max(ids.size, 1))
    out: list = []
    for lo in range(0, ids.size, chunk):
        out.extend(r[-1] for r in _run_chunk(config, law, ids[lo:lo + chunk], reduce))
    return out
