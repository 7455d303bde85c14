"""Assembly of the limiting extremal process from a cluster pool.

Atoms ``p_i`` form a Poisson process with intensity ``C z sqrt2 e^{-sqrt2 x}``
on a window ``[lo, hi]``; each atom is decorated by a gap process drawn with
replacement from the pool.  Because gap processes lie in ``(-inf, 0]``,
the output restricted to ``[lo, inf)`` is exact up to the upper cutoff
``hi``, whose neglected mass is ``C z e^{-sqrt2 hi}``.
"""

from __future__ import annotations

import math

import numpy as np

from ..pointproc_stats import PointConfiguration

SQRT2 = math.sqrt(2.0)


def limit_atoms(z: float, C: float, window: tuple, rng: np.random.Generator) -> np.ndarray:
    """Poisson process with intensity ``C z sqrt2 e^{-sqrt2 x}`` on ``window``."""
    lo, hi = window
    if not hi >= lo:
        raise ValueError("window must satisfy lo <= hi")
    a, b = math.exp(-SQRT2 * lo), math.exp(-SQRT2 * hi)
    n = int(rng.poisson(C * z * (a - b)))
    u = rng.random(n)
    return np.sort(-np.log(a - u * (a - b)) / SQRT2)


def assemble_limit_process(z: float, C: float, pool, rng: np.random.Generator,
                           window: tuple = (-3.0, 12.0)) -> PointConfiguration:
    """``sum_{i,j} delta_{p_i + D_j^{(i)}}`` with clusters resampled from ``pool``.

    ``pool`` holds gap processes (``PointConfiguration`` or objects with a
    ``gaps`` attribute).
    """
    if C <= 0:
        raise ValueError("C must be positive")
    if z <= 0:
        raise ValueError("z must be positive")
    if len(pool) == 0:
        raise ValueError("empty cluster pool")
    atoms = limit_atoms(z, C, window, rng)
    if atoms.size == 0:
        return PointConfiguration(np.zeros(0), "Pi_t")
    pick = rng.integers(0, len(pool), size=atoms.size)
    parts = []
    for p, k in zip(atoms, pick):
        g = pool[int(k)]
        g = getattr(g, "gaps", g)
        parts.append(p + g.points)
    return PointConfiguration(np.concatenate(parts), "Pi_t")
