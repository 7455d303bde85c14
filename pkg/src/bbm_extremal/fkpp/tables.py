"""Tail of the maximum of BBM with drift ``-sqrt2`` at a fixed time.

``Q(y) = P(max_k x_k(t) - sqrt2 t > y)`` is ``v = 1 - u`` for Heaviside
data, read off the co-moving grid.  It is stored as ``log Q`` so that deep
tails keep their relative accuracy, and extended beyond the grid with the
last slope.
"""

from __future__ import annotations

import functools

import numpy as np

from ..branching_engine.law import BranchingLaw
from .solver import SQRT2, Grid, InitialCondition, SolutionField, solve

_FLOOR = 1e-300


class MaxTail:
    """``Q(y)`` and its inverse for one time ``t``."""

    def __init__(self, t: float, y: np.ndarray, log_q: np.ndarray):
        y = np.asarray(y, dtype=float)
        lq = np.minimum(np.asarray(log_q, dtype=float), 0.0)
        # keep the strictly decreasing part (the flat left end is Q = 1)
        keep = np.r_[True, np.diff(lq) < 0]
        self.t = float(t)
        self.y = y[keep]
        self.log_q = lq[keep]
        self._slope = (self.log_q[-1] - self.log_q[-2]) / (self.y[-1] - self.y[-2])

    @classmethod
    def from_field(cls, field: SolutionField) -> "MaxTail":
        y = field.lab_x - SQRT2 * field.time
        with np.errstate(divide="ignore"):
            lq = np.log(np.maximum(field.v, _FLOOR))
        cut = np.argmax(lq <= np.log(_FLOOR) + 1) if np.any(lq <= np.log(_FLOOR) + 1) else lq.size
        return cls(field.time, y[:cut], lq[:cut])

    @classmethod
    def build(cls, law: BranchingLaw, t: float, dx: float = 0.01, dt: float = 0.0025,
              y_range: tuple = (-40.0, 80.0)) -> "MaxTail":
        if t <= 0:
            raise ValueError("t must be positive")
        field = solve(InitialCondition("heaviside"), law, Grid(y_range[0], y_range[1], dx, dt), t, [t],
                      convention="v", monitor_front=False)[0]
        return cls.from_field(field)

    def log_sf(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.interp(y, self.y, self.log_q)
        beyond = y > self.y[-1]
        return np.where(beyond, self.log_q[-1] + self._slope * (y - self.y[-1]), out)

    def sf(self, y) -> np.ndarray:
        return np.exp(self.log_sf(y))

    def isf_log(self, log_p) -> np.ndarray:
        """``y`` with ``log Q(y) = log_p`` (``log_p <= 0``)."""
        lp = np.asarray(log_p, dtype=float)
        out = np.interp(-lp, -self.log_q, self.y)
        beyond = lp < self.log_q[-1]
        return np.where(beyond, self.y[-1] + (lp - self.log_q[-1]) / self._slope, out)

    def sample_above(self, h, u) -> np.ndarray:
        """Max conditioned on exceeding ``h`` by inversion: ``Q(y) = u Q(h)``."""
        return np.maximum(self.isf_log(np.log(u) + self.log_sf(h)), np.asarray(h, dtype=float))


@functools.lru_cache(maxsize=16)
def _cached(law_items: tuple, t: float, dx: float, dt: float) -> MaxTail:
    return MaxTail.build(BranchingLaw(dict(law_items)), t, dx, dt)


def max_tail(law: BranchingLaw | None = None, t: float = 10.0, dx: float = 0.01,
             dt: float = 0.0025) -> MaxTail:
    """Memoized :meth:`MaxTail.build`."""
    law = law or BranchingLaw.binary()
    return _cached(tuple(sorted(law.offspring_probs.items())), float(t), dx, dt)
