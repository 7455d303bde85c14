"""Poisson atoms with intensity ``sqrt(2/pi) (-x) e^{-sqrt2 x}`` on bounded windows.

The intensity is integrable on every bounded window but its total mass on
``(-inf, 0)`` is infinite, so a window is always required.  Counts are
Poisson with the closed-form mass and positions are drawn by inverting the
closed-form cumulative intensity.  Weighted intensities ``lambda(x) w(x)``
(used to keep only atoms whose cluster reaches a level) are sampled by
inversion of a tabulated cumulative intensity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid

SQRT2 = math.sqrt(2.0)
NORM = math.sqrt(2.0 / math.pi)


def intensity(x) -> np.ndarray:
    """``sqrt(2/pi) (-x) e^{-sqrt2 x}`` on ``x < 0``, zero elsewhere."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return np.where(x < 0, NORM * (-x) * np.exp(-SQRT2 * np.minimum(x, 0.0)), 0.0)


def _antiderivative(x):
    # d/dx [e^{-sqrt2 x} (x/sqrt2 + 1/2)] = -x e^{-sqrt2 x}
    x = np.asarray(x, dtype=float)
    return np.exp(-SQRT2 * x) * (x / SQRT2 + 0.5)


def _check_window(window) -> tuple[float, float]:
    lo, hi = (float(w) for w in window)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("the atom intensity has infinite mass on unbounded windows; "
                         "give a bounded window")
    if hi < lo:
        raise ValueError("window must satisfy lo <= hi")
    return lo, hi


def atom_mass(window) -> float:
    """``Lambda(window) = sqrt(2/pi) int_window (-x) e^{-sqrt2 x} dx``."""
    lo, hi = _check_window(window)
    hi = min(hi, 0.0)
    if hi <= lo:
        return 0.0
    return float(NORM * (_antiderivative(hi) - _antiderivative(lo)))


@dataclass(frozen=True, eq=False)
class PoissonAtoms:
    """Atom positions (sorted) drawn on ``window``; ``mass`` is the expected count."""

    positions: np.ndarray
    window: tuple
    mass: float

    def __len__(self):
        return self.positions.size

    def count_in(self, lo: float, hi: float) -> int:
        return int(np.searchsorted(self.positions, hi) - np.searchsorted(self.positions, lo))


def _invert_closed_form(u: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Solve ``F(x) = F(lo) + u (F(hi) - F(lo))`` on ``[lo, hi]`` (``F`` increasing)."""
    Flo, Fhi = _antiderivative(lo), _antiderivative(hi)
    target = Flo + u * (Fhi - Flo)
    # start from a tabulated inverse, then polish with safeguarded Newton steps
    grid = np.linspace(lo, hi, 2049)
    x = np.interp(target, _antiderivative(grid), grid)
    a = np.full_like(x, lo)
    b = np.full_like(x, hi)
    for _ in range(30):
        f = _antiderivative(x) - target
        a = np.where(f < 0, x, a)
        b = np.where(f > 0, x, b)
        d = -x * np.exp(-SQRT2 * x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d > 0, f / d, 0.0)
        nx = x - step
        bad = ~((nx > a) & (nx < b))
        nx = np.where(bad, 0.5 * (a + b), nx)
        if np.all(np.abs(nx - x) <= 1e-13 * np.maximum(1.0, np.abs(x))):
            x = nx
            break
        x = nx
    return np.clip(x, lo, hi)


def sample_atoms(window, rng: np.random.Generator) -> PoissonAtoms:
    """Poisson process with the atom intensity on a bounded window."""
    lo, hi = _check_window(window)
    mass = atom_mass((lo, hi))
    if mass <= 0:
        return PoissonAtoms(np.zeros(0), (lo, hi), 0.0)
    n = int(rng.poisson(mass))
    u = rng.random(n)
    x = _invert_closed_form(u, lo, min(hi, 0.0))
    return PoissonAtoms(np.sort(x), (lo, hi), mass)


class TabulatedIntensity:
    """Intensity ``f`` tabulated on a grid; Poisson sampling by CDF inversion.

    The cumulative mass is the trapezoid rule of ``f`` on the grid, and
    positions are found by linear interpolation of its inverse.
    """

    def __init__(self, grid: np.ndarray, values: np.ndarray):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.maximum(np.asarray(values, dtype=float), 0.0)
        self.cum = cumulative_trapezoid(self.values, self.grid, initial=0.0)

    @classmethod
    def weighted(cls, window, weight: Callable, n_grid: int = 8001) -> "TabulatedIntensity":
        """``intensity(x) * weight(x)`` on the window."""
        lo, hi = _check_window(window)
        hi = min(hi, 0.0)
        grid = np.linspace(lo, hi, n_grid) if hi > lo else np.array([lo, lo])
        return cls(grid, intensity(grid) * weight(grid))

    @property
    def mass(self) -> float:
        return float(self.cum[-1])

    @property
    def window(self) -> tuple:
        return float(self.grid[0]), float(self.grid[-1])

    def sample(self, rng: np.random.Generator) -> PoissonAtoms:
        if self.mass <= 0:
            return PoissonAtoms(np.zeros(0), self.window, 0.0)
        n = int(rng.poisson(self.mass))
        x = self.invert(rng.random(n))
        return PoissonAtoms(np.sort(x), self.window, self.mass)

    def invert(self, u: np.ndarray) -> np.ndarray:
        keep = np.r_[True, np.diff(self.cum) > 0]
        return np.interp(np.asarray(u) * self.mass, self.cum[keep], self.grid[keep])
