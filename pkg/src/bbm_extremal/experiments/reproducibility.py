"""Bit-level rerun checks: the same seed must give the same bytes."""

from __future__ import annotations

import hashlib

import numpy as np

from ..branching_engine import BranchingLaw, SimConfig, simulate_batch
from ..cluster_sampler import sample_auxiliary_batch, sample_cluster_law
from ..fkpp import Grid, InitialCondition, solve


def digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()


def _bbm(chunk):
    cfg = SimConfig(horizon=5.0, seed=11, prune_gap=8.0, record_genealogy=True)
    snaps = [r[-1] for r in simulate_batch(cfg, BranchingLaw.binary(), 40, chunk=chunk)]
    return digest(*[s.positions for s in snaps], *[s.ids for s in snaps], *[s.parent_ids for s in snaps])


def _cluster():
    r = sample_cluster_law(6.0, 0.7, n_samples=50, seed=3)
    return digest(r.overshoots, *[g.points for g in r.gap_processes])


def _aux(batch):
    z = np.array([0.5, 1.0, 2.0, 3.0])
    parts = [sample_auxiliary_batch(4.0, z[i:i + batch], seed=5, mode="thinned", level=-1.0, first_sample=i)
             for i in range(0, z.size, batch)]
    return digest(*[s.assembled.points for p in parts for s in p])


def _pde():
    f = solve(InitialCondition("heaviside"), BranchingLaw.binary(), Grid(-20.0, 20.0, 0.05, 0.01), 2.0, [2.0])[0]
    return digest(f.values)


def rerun_digests() -> dict:
    """Pairs of digests that must agree: reruns and different batch partitions."""
    return {
        "bbm_rerun": (_bbm(40), _bbm(40)),
        "bbm_chunking": (_bbm(40), _bbm(7)),
        "cluster_rerun": (_cluster(), _cluster()),
        "auxiliary_batching": (_aux(4), _aux(1)),
        "fkpp_rerun": (_pde(), _pde()),
    }
