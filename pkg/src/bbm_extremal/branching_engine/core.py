"""Vectorized stepping of many independent BBM populations.

All particles of a batch of replicas live in flat numpy arrays.  Time is cut
into slices; inside a slice every particle draws an Exp(1) lifetime and a
Gaussian increment from its own counter-based stream.  A particle whose
clock outlives the slice moves to the slice end and keeps going (the clock is
memoryless, so redrawing it at the next slice is exact); otherwise it is
replaced at its death point by ``k`` children, which are processed in the same
slice.  No draw depends on how particles are ordered or batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng
from .law import BranchingLaw


def counters(slice_index: int, purpose: int):
    return np.uint64(slice_index) * np.uint64(8) + np.uint64(purpose)


@dataclass
class Population:
    rep: np.ndarray
    pos: np.ndarray
    key: np.ndarray
    pid: np.ndarray
    root: np.ndarray
    birth: np.ndarray
    path: np.ndarray | None = None

    FIELDS = ("rep", "pos", "key", "pid", "root", "birth")

    def __len__(self):
        return self.pos.size

    def take(self, idx) -> "Population":
        return Population(*(getattr(self, f)[idx] for f in self.FIELDS),
                          path=None if self.path is None else self.path[idx])

    @classmethod
    def concat(cls, parts) -> "Population":
        parts = [p for p in parts if p is not None]
        path = None
        if parts and parts[0].path is not None:
            path = np.concatenate([p.path for p in parts])
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.FIELDS), path=path)

    @classmethod
    def empty(cls, n_path: int | None = None) -> "Population":
        return cls(np.zeros(0, np.int64), np.zeros(0), np.zeros(0, np.uint64), np.zeros(0, np.int64),
                   np.zeros(0, np.int16), np.zeros(0),
                   None if n_path is None else np.zeros((0, n_path)))


@dataclass
class SliceRecord:
    births_rep: list
    births_pid: list
    births_parent: list
    births_time: list
    split_k: list
    split_rep: list
    keep_births: bool = True


def _new_record() -> SliceRecord:
    return SliceRecord([], [], [], [], [], [])


def _assign_pids(rep_children: np.ndarray, next_pid: np.ndarray) -> np.ndarray:
    """Sequential per-replica ids for children already sorted by (rep, parent, j)."""
    n = rep_children.size
    if n == 0:
        return np.zeros(0, np.int64)
    starts = np.flatnonzero(np.r_[True, rep_children[1:] != rep_children[:-1]])
    group_start = np.repeat(starts, np.diff(np.r_[starts, n]))
    rank = np.arange(n) - group_start
    out = next_pid[rep_children] + rank
    np.add.at(next_pid, rep_children, 1)
    return out


def _draw_steps(work: Population, b: float, j: int, drift: float, law: BranchingLaw):
    """Lifetime, displacement and offspring count of every particle in ``work``."""
    n = len(work)
    L = rng.exponential(work.key, counters(j, 0))
    s0 = work.birth_start
    survive = s0 + L >= b
    dt = np.where(survive, b - s0, L)
    y = work.pos + drift * dt + np.sqrt(dt) * rng.normal(work.key, counters(j, 1))
    k = law.draw(rng.uniform(work.key, counters(j, 2))) if not law.is_binary else np.full(n, 2)
    tend = np.where(survive, b, s0 + L)
    return survive, y, tend, k


def advance_slice(pop: Population, a: float, b: float, j: int, law: BranchingLaw, drift: float,
                  next_pid: np.ndarray, record: SliceRecord | None = None,
                  start: np.ndarray | None = None) -> Population:
    """Move every particle from time ``a`` (or its own ``start`` time) to ``b``."""
    survivors = []
    work = pop
    work.birth_start = np.full(len(work), a) if start is None else np.asarray(start, dtype=float)
    while len(work):
        survive, y, tend, k = _draw_steps(work, b, j, drift, law)
        s_idx = np.flatnonzero(survive)
        if s_idx.size:
            sp = work.take(s_idx)
            sp.pos = y[s_idx]
            survivors.append(sp)
        d_idx = np.flatnonzero(~survive)
        if d_idx.size == 0:
            break
        dying = work.take(d_idx)
        dk = k[d_idx]
        if record is not None:
            record.split_k.append(dk)
            record.split_rep.append(dying.rep)
        order = np.lexsort((dying.pid, dying.rep))
        dying = dying.take(order)
        dk = dk[order]
        dy = y[d_idx][order]
        dt_ = tend[d_idx][order]
        par = np.repeat(np.arange(len(dying)), dk)
        cidx = np.arange(par.size) - np.repeat(np.r_[0, np.cumsum(dk)[:-1]], dk)
        ckey = rng.child_keys(dying.key[par], cidx)
        crep = dying.rep[par]
        single = np.repeat(dk == 1, dk)
        cpid = np.empty(par.size, np.int64)
        cpid[single] = dying.pid[par[single]]
        multi = ~single
        cpid[multi] = _assign_pids(crep[multi], next_pid)
        cbirth = np.where(single, dying.birth[par], dt_[par])
        children = Population(crep, dy[par], ckey, cpid, dying.root[par], cbirth,
                              None if dying.path is None else dying.path[par])
        if record is not None and record.keep_births and multi.any():
            record.births_rep.append(crep[multi])
            record.births_pid.append(cpid[multi])
            record.births_parent.append(dying.pid[par[multi]])
            record.births_time.append(dt_[par][multi])
        children.birth_start = dt_[par]
        work = children
    out = Population.concat(survivors) if survivors else Population.empty(
        None if pop.path is None else pop.path.shape[1])
    return out


def group_max(rep: np.ndarray, values: np.ndarray, n_rep: int, fill=-np.inf) -> np.ndarray:
    out = np.full(n_rep, fill)
    if values.size:
        np.maximum.at(out, rep, values)
    return out


def prune(pop: Population, n_rep: int, gap: float, pruned: np.ndarray,
          reference: np.ndarray | None = None) -> Population:
    """Drop particles more than ``gap`` below their replica's maximum (or ``reference``)."""
    if len(pop) == 0:
        return pop
    ref = group_max(pop.rep, pop.pos, n_rep) if reference is None else reference
    drop = pop.pos < ref[pop.rep] - gap
    if drop.any():
        np.add.at(pruned, pop.rep[drop], 1)
        return pop.take(np.flatnonzero(~drop))
    return pop


def slice_boundaries(horizon: float, checkpoints, slice_dt: float) -> np.ndarray:
    pts = set(np.round(np.arange(0.0, horizon, slice_dt), 12).tolist())
    pts.update(float(c) for c in checkpoints)
    pts.add(float(horizon))
    pts.add(0.0)
    return np.array(sorted(p for p in pts if 0.0 <= p <= horizon))


def expected_log_population(horizon: float, prune_gap: float | None) -> float:
    if prune_gap is None:
        return horizon
    return min(horizon, math.sqrt(2) * prune_gap + 2.0)
