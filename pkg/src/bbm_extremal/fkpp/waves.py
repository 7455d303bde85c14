"""Front location, traveling-wave extraction and tail fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..branching_engine.diagnostics import centering_m  # noqa: F401  (re-export)
from ..branching_engine.law import BranchingLaw
from .solver import SQRT2, SolutionField

BOUNDARY_TOL = 1e-6
UNCONVERGED_DISCREPANCY = 0.01


def _crossing(x: np.ndarray, u: np.ndarray, level: float) -> float:
    above = u >= level
    if above.all() or not above.any():
        raise ValueError(f"no crossing of level {level}")
    i = int(np.argmax(above))
    if i == 0:
        return float(x[0])
    u0, u1 = u[i - 1], u[i]
    if u1 == u0:
        return float(x[i])
    return float(x[i - 1] + (level - u0) / (u1 - u0) * (x[i] - x[i - 1]))


def front_position(field: SolutionField, level: float = 0.5) -> float:
    """Lab coordinate where ``u`` first reaches ``level`` (linear interpolation)."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    return _crossing(field.lab_x, field.u, level)


@dataclass(frozen=True)
class WaveProfile:
    """Centered wave ``omega`` on a grid.

    ``tail`` holds ``1 - omega`` computed without cancellation where possible.
    ``discrepancy`` is the sup distance between the two recentered input
    profiles (0 for profiles built directly from arrays).
    """

    x: np.ndarray
    values: np.ndarray
    tail: np.ndarray
    centering: str = "by_median"
    time: float | None = None
    discrepancy: float = 0.0
    shift: float = 0.0
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, x, values=None, tail=None, centering: str = "synthetic") -> "WaveProfile":
        x = np.asarray(x, dtype=float)
        if tail is None:
            values = np.asarray(values, dtype=float)
            tail = 1.0 - values
        else:
            tail = np.asarray(tail, dtype=float)
            values = 1.0 - tail if values is None else np.asarray(values, dtype=float)
        return cls(x, values, tail, centering)

    @property
    def converged(self) -> bool:
        return self.discrepancy <= UNCONVERGED_DISCREPANCY

    def __call__(self, xs) -> np.ndarray:
        return np.interp(np.asarray(xs, dtype=float), self.x, self.values)

    def check_shape(self, tol: float = BOUNDARY_TOL) -> bool:
        """Nondecreasing with limits 0 and 1 at the ends (within ``tol``)."""
        mono = bool(np.all(np.diff(self.values) >= -tol))
        return mono and self.values[0] <= tol and self.values[-1] >= 1 - tol


def _center(field: SolutionField, centering: str, level: float) -> float:
    if centering == "by_median":
        return front_position(field, level)
    if centering == "by_m":
        return centering_m(field.time)
    raise ValueError(f"unknown centering {centering!r}")


def wave_profile(fields: Sequence[SolutionField], centering: str = "by_median",
                 extrapolate: bool = False, level: float = 0.5) -> WaveProfile:
    """Recentered profile of the later of two fields plus a convergence certificate.

    With ``extrapolate=True`` the returned profile removes the leading
    ``1/t`` relaxation: ``(t2 w2 - t1 w1) / (t2 - t1)`` on the later grid.
    """
    if len(fields) != 2:
        raise ValueError("wave_profile needs exactly two fields")
    f1, f2 = sorted(fields, key=lambda f: f.time)
    if f1.time < 30:
        warnings.warn("wave extraction below t=30 is far from the traveling wave", stacklevel=2)
    c1, c2 = _center(f1, centering, level), _center(f2, centering, level)
    x = f2.lab_x - c2
    u2, v2 = f2.u, f2.v
    u1 = np.interp(x, f1.lab_x - c1, f1.u)
    disc = float(np.max(np.abs(u2 - u1)))
    if extrapolate and f2.time > f1.time:
        v1 = np.interp(x, f1.lab_x - c1, f1.v)
        a, b = f2.time / (f2.time - f1.time), f1.time / (f2.time - f1.time)
        v2 = np.clip(a * v2 - b * v1, 0.0, 1.0)
        u2 = 1.0 - v2
    if disc > UNCONVERGED_DISCREPANCY:
        warnings.warn(f"profiles differ by {disc:.3g}: flagged unconverged", stacklevel=2)
    return WaveProfile(x, u2, v2, centering, f2.time, disc, c2,
                       {"times": [f1.time, f2.time], "extrapolated": bool(extrapolate)})


def optimal_shift_difference(p: WaveProfile, q: WaveProfile, span: float = 3.0,
                             x_range=(-15.0, 15.0)) -> tuple[float, float]:
    """Shift ``s`` minimizing ``sup |p(x) - q(x + s)|``; returns ``(s, sup)``."""
    from scipy.optimize import minimize_scalar

    xs = np.linspace(*x_range, 3001)
    pv = p(xs)

    def cost(s):
        return float(np.max(np.abs(pv - q(xs + s))))

    # coarse bracket first since the sup-norm is only piecewise smooth
    grid = np.linspace(-span, span, 121)
    s0 = grid[int(np.argmin([cost(s) for s in grid]))]
    h = grid[1] - grid[0]
    res = minimize_scalar(cost, bounds=(s0 - h, s0 + h), method="bounded",
                          options={"xatol": 1e-7})
    return float(res.x), float(res.fun)


def wave_ode_residual(profile: WaveProfile, law: BranchingLaw | None = None,
                      x_range: tuple[float, float] | None = None) -> float:
    """Discrete L2 norm ``sqrt(dx sum r_i^2)`` of ``1/2 w'' + sqrt2 w' + F(w) - w``.

    ``F = sum p_k w^k``; evaluated at interior nodes of a uniform grid.
    """
    law = law or BranchingLaw.binary()
    x, w = profile.x, profile.values
    if len(x) < 3:
        return 0.0
    dx = np.diff(x)
    h = float(dx.mean())
    if np.max(np.abs(dx - h)) > 1e-9 * max(1.0, abs(h)):
        raise ValueError("residual needs a uniform grid")
    r = (0.5 * (w[2:] - 2 * w[1:-1] + w[:-2]) / h**2 + SQRT2 * (w[2:] - w[:-2]) / (2 * h)
         + law.generating(w[1:-1]) - w[1:-1])
    if x_range is not None:
        keep = (x[1:-1] >= x_range[0]) & (x[1:-1] <= x_range[1])
        r = r[keep]
    return float(math.sqrt(h * np.sum(r**2)))


@dataclass(frozen=True)
class TailFit:
    C: float
    variation: float
    window: tuple[float, float]
    n_points: int
    reliable: bool
    resolved: bool

    def to_dict(self) -> dict:
        return {"C": self.C, "variation": self.variation, "window": list(self.window),
                "n_points": self.n_points, "reliable": self.reliable, "resolved": self.resolved}


def tail_constant(profile: WaveProfile, window: tuple[float, float] = (6.0, 9.0),
                  max_variation: float = 0.10, noise_floor: float = 1e-250) -> TailFit:
    """Fit ``(1 - omega(x)) / (x e^{-sqrt2 x})`` by a constant over ``window``.

    Log-space least squares with uniform weights, i.e. the geometric mean of
    the ratio.  ``variation`` is ``(max - min) / C`` of the ratio across the
    window; above ``max_variation`` the fit is flagged unreliable.
    ``resolved`` records whether the window sits where ``omega > 0.99`` and
    ``1 - omega`` is above ``noise_floor``.
    """
    lo, hi = window
    if lo <= 0 or hi <= lo:
        raise ValueError("tail window must satisfy 0 < lo < hi")
    x, tail = profile.x, profile.tail
    sel = (x >= lo) & (x <= hi)
    if sel.sum() < 2:
        raise ValueError("tail window holds fewer than two grid points")
    xs, ts = x[sel], tail[sel]
    resolved = bool(np.all(ts < 0.01) and np.all(ts > noise_floor))
    if np.any(ts <= 0):
        return TailFit(float("nan"), float("inf"), (lo, hi), int(sel.sum()), False, False)
    logr = np.log(ts) - np.log(xs) + SQRT2 * xs
    C = float(np.exp(logr.mean()))
    ratio = np.exp(logr)
    variation = float((ratio.max() - ratio.min()) / C)
    return TailFit(C, variation, (lo, hi), int(sel.sum()), variation <= max_variation, resolved)


def gumbel_mixture_cdf(x, C: float, z_samples) -> np.ndarray | float:
    """Average of ``exp(-C z e^{-sqrt2 x})`` over the Z samples."""
    if C <= 0:
        raise ValueError("C must be positive")
    z = np.asarray(getattr(z_samples, "samples", z_samples), dtype=float)
    if z.size == 0:
        raise ValueError("no Z samples")
    xs = np.asarray(x, dtype=float)
    scale = C * np.exp(-SQRT2 * xs)
    out = np.exp(-np.multiply.outer(scale, z)).mean(axis=-1)
    return float(out) if np.ndim(xs) == 0 else out
