"""The cluster law: BBM seen from its maximum given an unusually large maximum.

With ``x = -a sqrt t + b`` the conditioning event is
``x + max_k x_k(t) - sqrt2 t > 0``, i.e. the maximum of the BBM with drift
``-sqrt2`` exceeds ``h = a sqrt t - b``.  A sample is the gap process
``{x_k - max_j x_j}`` plus the overshoot ``max - h``.

``method="rejection"`` simulates free BBMs and keeps those meeting the
event.  ``method="spine"`` draws the conditioned tree exactly through
size-biasing (see :mod:`bbm_extremal.branching_engine.spine`); both give the
same law, the second at an acceptance of order one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import rng
from ..branching_engine import BranchingLaw, SimConfig, conditioned_draws, simulate_ids
from ..pointproc_stats import PointConfiguration

SQRT2 = math.sqrt(2.0)
METHODS = ("spine", "rejection")
_CLUSTER_SALT = 0xC1


@dataclass(frozen=True, eq=False)
class ClusterSample:
    gaps: PointConfiguration
    overshoot: float
    offset: float

    def __post_init__(self):
        if len(self.gaps) == 0 or self.gaps.points[-1] != 0.0:
            raise ValueError("the gap process has maximum exactly 0")
        if not self.overshoot > 0:
            raise ValueError("overshoot must be positive")


@dataclass(frozen=True)
class ClusterLawResult:
    samples: list
    t: float
    a: float
    b: float
    method: str
    trials: int
    seed: int

    @property
    def level(self) -> float:
        return self.a * math.sqrt(self.t) - self.b

    @property
    def acceptance_rate(self) -> float:
        return len(self.samples) / self.trials if self.trials else float("nan")

    @property
    def overshoots(self) -> np.ndarray:
        return np.array([s.overshoot for s in self.samples])

    @property
    def gap_processes(self) -> list:
        return [s.gaps for s in self.samples]

    def metadata(self) -> dict:
        return {"t": self.t, "a": self.a, "b": self.b, "level": self.level, "method": self.method,
                "trials": self.trials, "accepted": len(self.samples),
                "acceptance_rate": self.acceptance_rate, "seed": self.seed}


def _to_sample(positions: np.ndarray, h: float, offset: float) -> ClusterSample:
    m = float(np.max(positions))
    return ClusterSample(PointConfiguration(positions - m, "D"), m - h, offset)


def _engine(t: float, seed: int, prune_gap) -> SimConfig:
    return SimConfig(horizon=t, drift=-SQRT2, seed=rng.derive_key(seed, _CLUSTER_SALT),
                     prune_gap=prune_gap)


def sample_cluster_law(t: float, a: float, b: float = 0.0, n_samples: int = 1000, seed: int = 0,
                       law: BranchingLaw | None = None, prune_gap: float | None = 6.0,
                       method: str = "spine", budget: int = 1_000_000, batch: int = 20_000,
                       first_sample: int = 0) -> ClusterLawResult:
    """``n_samples`` draws of the gap process and overshoot given the event.

    ``budget`` bounds the number of free BBM trials (rejection) or the
    attempts per sample (spine).  With rejection, fewer than ``n_samples``
    draws are returned if the budget runs out, and a ``RuntimeError`` with
    the estimated acceptance probability is raised if none is accepted.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    if t <= 0:
        raise ValueError("t must be positive")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    law = law or BranchingLaw.binary()
    h = a * math.sqrt(t) - b
    offset = -h
    cfg = _engine(t, seed, prune_gap)
    if method == "spine":
        ids = first_sample + np.arange(n_samples, dtype=np.int64)
        draws = conditioned_draws(cfg, law, h, ids, max_attempts=budget)
        samples = [_to_sample(s.positions, h, offset) for s in draws.snapshots]
        return ClusterLawResult(samples, t, a, b, method, int(draws.attempts.sum()), seed)
    samples, used = [], 0
    while len(samples) < n_samples and used < budget:
        m = min(batch, budget - used)
        ids = first_sample + used + np.arange(m, dtype=np.int64)
        res = simulate_ids(cfg, law, ids, reduce=lambda s: s.positions if s.n and s.positions.max() > h
                           else None)
        hit = [i for i, r in enumerate(res) if r is not None][:n_samples - len(samples)]
        samples.extend(_to_sample(res[i], h, offset) for i in hit)
        if len(samples) == n_samples:
            used += hit[-1] + 1
            break
        used += m
    if not samples:
        from ..fkpp.tables import max_tail
        p = float(max_tail(law, t).sf(h))
        raise RuntimeError(f"no acceptance in {used} trials; estimated acceptance probability "
                           f"{p:.3g} (need about {1 / p:.3g} trials per sample)")
    return ClusterLawResult(samples, t, a, b, method, used, seed)
