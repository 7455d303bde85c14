"""Where the atoms that reach the top of the auxiliary process sit.

Among atoms whose cluster has a point above ``y`` the rescaled depth
``z = -eta / sqrt t`` is compared with the density
``z^2 e^{-z^2/2} / sqrt(pi/2)`` on ``(0, inf)`` (mode ``sqrt2``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

MIN_ATOMS = 50
HIST_BIN = 0.1


def reference_density(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return np.where(z > 0, z ** 2 * np.exp(-z ** 2 / 2) / math.sqrt(math.pi / 2), 0.0)


def reference_cdf(z) -> np.ndarray:
    z = np.maximum(np.asarray(z, dtype=float), 0.0)
    return special.erf(z / math.sqrt(2)) - math.sqrt(2 / math.pi) * z * np.exp(-z ** 2 / 2)


@dataclass
class AtomWindowReport:
    t: float
    y: float
    n_atoms: int
    underpowered: bool
    c1: float
    c2: float
    z_range: tuple = (0.0, math.inf)
    hist_mode: float | None = None
    kde_mode: float | None = None
    mass_outside: float | None = None
    ks_reference: float | None = None
    bins: list = field(default_factory=list)
    counts: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"t": self.t, "y": self.y, "n_atoms": self.n_atoms, "underpowered": self.underpowered,
             "c1": self.c1, "c2": self.c2, "sampled_z_range": list(self.z_range)}
        if not self.underpowered:
            d.update({"hist_mode": self.hist_mode, "kde_mode": self.kde_mode,
                      "mass_outside": self.mass_outside, "ks_reference": self.ks_reference,
                      "bins": self.bins, "counts": self.counts})
        return d


def contributing_depths(t: float, y: float, samples) -> np.ndarray:
    """``-eta / sqrt t`` of every atom whose cluster has a point above ``y``."""
    out = []
    for s in samples:
        if s.level is not None and y < s.level:
            raise ValueError(f"samples only resolve points above {s.level}; y={y} is below")
        if len(s.atoms) == 0:
            continue
        hit = s.shift + s.atom_maxima > y
        out.append(-s.atoms.positions[hit] / math.sqrt(t))
    return np.concatenate(out) if out else np.zeros(0)


def atom_window_diagnostic(t: float, y: float, samples, c1: float = 0.3, c2: float = 3.5,
                           min_atoms: int = MIN_ATOMS, bin_width: float = HIST_BIN) -> AtomWindowReport:
    if t <= 0:
        raise ValueError("t must be positive")
    z = contributing_depths(t, y, samples)
    # atoms were only drawn in this range of z; mass outside it is not seen
    z_range = (max((-s.atoms.window[1] / math.sqrt(t) for s in samples), default=0.0),
               min((-s.atoms.window[0] / math.sqrt(t) for s in samples), default=math.inf))
    if z_range[0] >= c1 or z_range[1] <= c2:
        warnings.warn(f"sampling window z in {z_range} does not extend beyond [{c1}, {c2}]; "
                      "the outside mass is under-estimated", stacklevel=2)
    if z.size < min_atoms:
        return AtomWindowReport(t, y, int(z.size), True, c1, c2, z_range)
    edges = np.arange(0.0, max(5.0, z.max()) + bin_width, bin_width)
    counts, _ = np.histogram(z, edges)
    i = int(np.argmax(counts))
    hist_mode = 0.5 * (edges[i] + edges[i + 1])
    kde = stats.gaussian_kde(z)
    grid = np.linspace(0, edges[-1], 2001)
    kde_mode = float(grid[np.argmax(kde(grid))])
    outside = float(np.mean((z < c1) | (z > c2)))
    ks = stats.kstest(z, reference_cdf).statistic
    return AtomWindowReport(t, y, int(z.size), False, c1, c2, z_range, float(hist_mode), kde_mode, outside,
                            float(ks), edges.tolist(), counts.tolist())
