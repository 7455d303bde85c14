"""Exact draws of BBM conditioned on ``max_k x_k(t) > h``.

Size-biasing the tree by ``N_h``, the number of particles above ``h`` at time
``t``, gives a tree with a distinguished particle (the spine) ending above
``h``.  Under that law the spine is a Brownian motion with the engine drift
conditioned to end above ``h``, it splits at rate ``m = sum k p_k`` into a
size-biased number ``k`` of children (``P(k) = k p_k / m``), one of which
carries the spine on while the ``k - 1`` others start independent free BBMs.
Accepting such a tree with probability ``1 / N_h`` (``N_h >= 1`` because of
the spine) yields exactly the BBM conditioned on ``N_h >= 1``.  The mean
acceptance is ``P(max > h) / E N_h``, which stays of order one far in the
tail, where plain rejection has acceptance ``P(max > h)``.

All randomness is a function of ``(seed, item id, attempt)``, so the
draws do not depend on the batch size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .. import rng
from .core import Population, advance_slice, group_max, prune, slice_boundaries
from .law import BranchingLaw
from .simulate import PopulationSnapshot, SimConfig

_SPINE_SALT = 0x5A17E
_ROOT_SALT = 1 << 20
# purposes of the per-trial counter-based draws
_END, _ACCEPT = 0, 1
_GAP0, _KIDS0, _BRIDGE0 = 1 << 20, 2 << 20, 3 << 20


@dataclass(frozen=True)
class ConditionedDraws:
    """One accepted conditioned draw per item, plus the attempt counts."""

    snapshots: list
    levels: np.ndarray
    attempts: np.ndarray

    @property
    def acceptance_rate(self) -> float:
        total = int(self.attempts.sum())
        return len(self.snapshots) / total if total else float("nan")


def _size_biased(law: BranchingLaw):
    ks = np.array(sorted(law.offspring_probs))
    w = ks * np.array([law.offspring_probs[k] for k in ks])
    return ks, np.cumsum(w / w.sum())


def _skeleton(keys: np.ndarray, horizon: float, drift: float, levels: np.ndarray, law: BranchingLaw):
    """Spine end points, split times and sibling counts for each trial key."""
    n = keys.size
    c = (levels - drift * horizon) / math.sqrt(horizon)
    u = rng.uniform(keys, _END)
    z = stats.norm.isf(u * stats.norm.sf(c))
    z = np.maximum(z, c)
    x_end = drift * horizon + math.sqrt(horizon) * z
    m = sum(k * p for k, p in law.offspring_probs.items())
    ks, cdf = _size_biased(law)
    trial, times, sibs = [], [], []
    clock = np.zeros(n)
    alive = np.arange(n)
    i = 0
    while alive.size:
        clock[alive] += rng.exponential(keys[alive], _GAP0 + i) / m
        alive = alive[clock[alive] < horizon]
        if alive.size:
            k = ks[np.searchsorted(cdf, rng.uniform(keys[alive], _KIDS0 + i), side="right").clip(
                max=ks.size - 1)]
            trial.append(alive)
            times.append(clock[alive].copy())
            sibs.append(k - 1)
        i += 1
    if trial:
        trial, times, sibs = np.concatenate(trial), np.concatenate(times), np.concatenate(sibs)
    else:
        trial, times, sibs = np.zeros(0, np.int64), np.zeros(0), np.zeros(0, np.int64)
    return x_end, trial, times, sibs


def _bridge(keys: np.ndarray, trial: np.ndarray, times: np.ndarray, x_end: np.ndarray,
            horizon: float) -> np.ndarray:
    """Spine positions at ``times`` (grouped arbitrarily) for a bridge 0 -> x_end."""
    order = np.lexsort((times, trial))
    tr, ts = trial[order], times[order]
    out = np.empty(ts.size)
    first = np.r_[True, tr[1:] != tr[:-1]] if ts.size else np.zeros(0, bool)
    rank = np.arange(ts.size) - np.maximum.accumulate(np.where(first, np.arange(ts.size), 0))
    prev_t = np.zeros(x_end.size)
    prev_x = np.zeros(x_end.size)
    r = 0
    while True:
        sel = np.flatnonzero(rank == r)
        if sel.size == 0:
            break
        k = tr[sel]
        s = ts[sel]
        t0, x0 = prev_t[k], prev_x[k]
        span = horizon - t0
        frac = np.where(span > 0, (s - t0) / np.where(span > 0, span, 1.0), 1.0)
        mean = x0 + frac * (x_end[k] - x0)
        var = np.maximum((s - t0) * (horizon - s) / np.where(span > 0, span, 1.0), 0.0)
        x = mean + np.sqrt(var) * rng.normal(keys[k], _BRIDGE0 + r)
        out[order[sel]] = x
        prev_t[k], prev_x[k] = s, x
        r += 1
    return out


def _run_trials(config: SimConfig, law: BranchingLaw, levels: np.ndarray, keys: np.ndarray,
                labels: np.ndarray):
    """Grow one size-biased tree per trial key; returns snapshots and acceptance flags."""
    horizon, drift = float(config.horizon), float(config.drift)
    n = keys.size
    x0 = config.starts[0]
    x_end, ev_trial, ev_time, ev_sibs = _skeleton(keys, horizon, drift, levels - x0, law)
    bounds = slice_boundaries(horizon, (), config.slice_dt)
    inner = bounds[1:-1]
    # spine positions at the split times and at the inner slice boundaries
    b_trial = np.repeat(np.arange(n), inner.size)
    b_time = np.tile(inner, n)
    pos_all = _bridge(keys, np.r_[ev_trial, b_trial], np.r_[ev_time, b_time], x_end, horizon)
    ev_pos = pos_all[:ev_trial.size]
    spine_at = np.full((n, bounds.size), np.nan)
    spine_at[:, -1] = x_end
    if inner.size:
        spine_at[:, 1:-1] = pos_all[ev_trial.size:].reshape(n, inner.size)
    spine_at[:, 0] = 0.0
    # one free root per sibling; its lineage key comes from the trial key
    root_ev = np.repeat(np.arange(ev_trial.size), ev_sibs)
    sib_idx = np.arange(root_ev.size) - np.repeat(np.r_[0, np.cumsum(ev_sibs)[:-1]], ev_sibs)
    r_trial = ev_trial[root_ev]
    stride = law.max_offspring
    r_key = rng.child_keys(keys[r_trial], _ROOT_SALT + _event_rank(ev_trial)[root_ev] * stride + sib_idx)
    r_time = ev_time[root_ev]
    r_pos = ev_pos[root_ev] + x0
    next_pid = np.ones(n, dtype=np.int64)
    order = np.lexsort((r_time, r_trial))
    r_trial, r_key, r_time, r_pos = r_trial[order], r_key[order], r_time[order], r_pos[order]
    r_pid = np.empty(r_trial.size, np.int64)
    if r_trial.size:
        first = np.r_[True, r_trial[1:] != r_trial[:-1]]
        rank = np.arange(r_trial.size) - np.maximum.accumulate(np.where(first, np.arange(r_trial.size), 0))
        r_pid = 1 + rank
        np.add.at(next_pid, r_trial, 1)
    pop = Population.empty()
    pruned = np.zeros(n, dtype=np.int64)
    for j in range(bounds.size - 1):
        a, b = float(bounds[j]), float(bounds[j + 1])
        new = np.flatnonzero((r_time >= a) & (r_time < b))
        fresh = Population(r_trial[new], r_pos[new], r_key[new], r_pid[new],
                           np.zeros(new.size, np.int16), r_time[new])
        start = np.r_[np.full(len(pop), a), r_time[new]]
        pop = advance_slice(Population.concat([pop, fresh]), a, b, j, law, drift, next_pid,
                            start=start)
        # no pruning after the last slice: every particle above the level must be counted
        if config.prune_gap is not None and j < bounds.size - 2:
            ref = np.maximum(group_max(pop.rep, pop.pos, n), spine_at[:, j + 1] + x0)
            pop = prune(pop, n, config.prune_gap, pruned, reference=ref)
    spine_end = x_end + x0
    above = np.bincount(pop.rep[pop.pos > levels[pop.rep]], minlength=n) + 1
    order = np.lexsort((pop.pid, pop.rep))
    cuts = np.searchsorted(pop.rep[order], np.arange(n + 1))
    snaps = []
    for r in range(n):
        sl = order[cuts[r]:cuts[r + 1]]
        pos = np.r_[spine_end[r], pop.pos[sl]]
        ids = np.r_[0, pop.pid[sl]]
        snaps.append(PopulationSnapshot(horizon, pos, ids, np.full(ids.size, -1, np.int64),
                                        np.r_[0.0, pop.birth[sl]], np.zeros(ids.size, np.int16),
                                        int(labels[r]), pruned_count=int(pruned[r])))
    accept = rng.uniform(keys, _ACCEPT) * above < 1.0
    return snaps, accept, above


def _event_rank(ev_trial: np.ndarray) -> np.ndarray:
    """Index of each split event among the events of its own trial."""
    if ev_trial.size == 0:
        return np.zeros(0, np.int64)
    order = np.argsort(ev_trial, kind="stable")
    t = ev_trial[order]
    first = np.r_[True, t[1:] != t[:-1]]
    rank_sorted = np.arange(t.size) - np.maximum.accumulate(np.where(first, np.arange(t.size), 0))
    out = np.empty(t.size, np.int64)
    out[order] = rank_sorted
    return out


def conditioned_draws(config: SimConfig, law: BranchingLaw, levels, ids, max_attempts: int = 10_000,
                      batch: int = 4096) -> ConditionedDraws:
    """One draw of BBM conditioned on ``max_k x_k(horizon) > level`` per item.

    ``levels`` (scalar or one per item) are absolute positions in the frame
    of ``config.drift``.  Attempt ``a`` of item ``i`` uses a lineage key
    derived from ``(config.seed, ids[i], a)``, so results depend only on the
    seed and the ids.  Raises ``RuntimeError`` if an item is not accepted
    within ``max_attempts``.
    """
    if len(config.starts) != 1:
        raise ValueError("conditioned draws need a single starting particle")
    if not config.horizon > 0:
        raise ValueError("conditioned draws need a positive horizon")
    ids = np.asarray(ids, dtype=np.int64).ravel()
    levels = np.broadcast_to(np.asarray(levels, dtype=float), ids.shape).copy()
    base = rng.root_keys(rng.derive_key(config.seed, _SPINE_SALT), ids)
    out: list = [None] * ids.size
    attempts = np.zeros(ids.size, dtype=np.int64)
    pending = np.arange(ids.size)
    while pending.size:
        if attempts[pending].max() >= max_attempts:
            raise RuntimeError(f"conditioned draw not accepted within {max_attempts} attempts")
        for lo in range(0, pending.size, batch):
            sel = pending[lo:lo + batch]
            keys = rng.child_keys(base[sel], attempts[sel])
            snaps, accept, _ = _run_trials(config, law, levels[sel], keys, ids[sel])
            attempts[sel] += 1
            for i, s_, ok in zip(sel, snaps, accept):
                if ok:
                    out[i] = s_
        pending = np.array([i for i in pending if out[i] is None], dtype=np.int64)
    return ConditionedDraws(out, levels, attempts)
