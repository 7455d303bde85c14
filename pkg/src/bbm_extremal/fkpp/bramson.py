"""Brownian-bridge approximation of F-KPP tails ahead of the front.

For a field ``v(r, .)`` (the ``1 - u`` form) the approximation reads::

    psi(r, t, X + sqrt2 t) = e^{-sqrt2 X} / sqrt(2 pi (t - r))
        * int_0^inf v(r, y + sqrt2 r) e^{sqrt2 y} e^{-(y - X)^2 / (2 (t - r))}
                    * (1 - e^{-2 y (X + c log t) / (t - r)}) dy

with ``c = 3 / (2 sqrt 2)``; the last factor is the probability that a
Brownian bridge stays below a straight line.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..branching_engine.law import BranchingLaw
from .solver import SQRT2, Grid, InitialCondition, SolutionField, solve

LOG_COEF = 1.5 / SQRT2
QUAD_CUT = 1e-14


def bridge_below_line_prob(A: float, B: float, t: float) -> float:
    """P(Brownian bridge of length ``t`` from 0 to 0 stays below the line from A to B)."""
    if t <= 0:
        raise ValueError("bridge length must be positive")
    if A < 0 or B < 0:
        raise ValueError("A and B must be non-negative")
    return float(-math.expm1(-2.0 * A * B / t))


# first-order shift of a barrier monitored at spacing dt: -zeta(1/2) / sqrt(2 pi)
DISCRETE_MONITORING_SHIFT = 0.5825971579390106


def bridge_below_line_mc(A: float, B: float, t: float, n: int = 100_000, steps: int = 1000,
                         rng: np.random.Generator | None = None, chunk: int = 5000) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of the bridge-below-line probability.

    The bridge is sampled on ``steps`` equal intervals and the line is only
    checked at the grid points, so the estimate converges to the continuous
    probability with an ``O(sqrt(t / steps))`` upward bias; compare it with
    :func:`bridge_below_line_prob` at ``A + s, B + s`` where
    ``s = DISCRETE_MONITORING_SHIFT * sqrt(t / steps)``.
    """
    rng = rng or np.random.default_rng()
    dt = t / steps
    s = np.arange(1, steps) * dt
    line = A + (B - A) * s / t
    ok = 0
    for lo in range(0, n, chunk):
        m = min(chunk, n - lo)
        w = np.cumsum(rng.standard_normal((m, steps)) * math.sqrt(dt), axis=1)
        bridge = w[:, :-1] - np.outer(w[:, -1], s / t)
        ok += int(np.sum(np.all(bridge < line, axis=1)))
    p = ok / n
    return p, math.sqrt(p * (1 - p) / n)


def in_validity_window(r: float, t: float, X: float) -> bool:
    return t >= 8 * r and X >= 8 * r - LOG_COEF * math.log(t)


def _front_data(u_r: SolutionField, r: float) -> tuple[np.ndarray, np.ndarray]:
    y = u_r.lab_x - SQRT2 * r
    keep = y >= 0
    return y[keep], u_r.v[keep]


def _trapz_truncated(y: np.ndarray, f: np.ndarray) -> float:
    if f.size < 2:
        return 0.0
    peak = np.max(np.abs(f))
    if peak == 0 or not np.isfinite(peak):
        return 0.0 if peak == 0 else float("nan")
    live = np.nonzero(np.abs(f) >= QUAD_CUT * peak)[0]
    lo, hi = max(live[0] - 1, 0), min(live[-1] + 2, f.size)
    return float(np.trapezoid(f[lo:hi], y[lo:hi]))


def psi_scaled(u_r: SolutionField, r: float, t: float, X: float) -> float:
    """``psi(r, t, X + sqrt2 t) * e^{sqrt2 X}`` (finite for any X)."""
    if t <= r:
        raise ValueError("psi needs t > r")
    y, v = _front_data(u_r, r)
    if y.size < 2:
        return 0.0
    s = t - r
    A = X + LOG_COEF * math.log(t)
    with np.errstate(under="ignore", divide="ignore"):
        log_w = np.log(v) + SQRT2 * y - (y - X) ** 2 / (2 * s)
        if not np.isfinite(log_w).any():
            return 0.0
        # the bridge factor is negative when A < 0; the formula is only meaningful for A >= 0
        bridge = -np.expm1(-2.0 * y * A / s)
        shift = log_w[np.isfinite(log_w)].max()
        integrand = np.exp(log_w - shift) * bridge
    return float(math.exp(shift) * _trapz_truncated(y, integrand) / math.sqrt(2 * math.pi * s))


def psi_approx(u_r: SolutionField, r: float, t: float, X: float) -> float:
    """Value of the approximation at lab position ``X + sqrt2 t``."""
    if t <= r:
        raise ValueError("psi needs t > r")
    if not in_validity_window(r, t, X):
        warnings.warn(f"(r={r}, t={t}, X={X}) lies outside t >= 8r, X >= 8r - c log t",
                      stacklevel=2)
    sc = psi_scaled(u_r, r, t, X)
    return sc * math.exp(-SQRT2 * X) if sc else 0.0


def first_moment_integral(u_r: SolutionField, r: float) -> float:
    """``int_0^inf y e^{sqrt2 y} v(r, y + sqrt2 r) dy``."""
    y, v = _front_data(u_r, r)
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        f = np.exp(np.log(v) + SQRT2 * y) * y
    return _trapz_truncated(y, f)


@dataclass(frozen=True)
class TailAsymptoticsReport:
    times: list
    values: list
    ratios: list
    limit: float
    stabilized: bool
    regime: str

    def to_dict(self) -> dict:
        return {"times": list(self.times), "values": list(self.values), "ratios": list(self.ratios),
                "limit": self.limit, "stabilized": self.stabilized, "regime": self.regime}


def front_tail_asymptotics(u_r: SolutionField, r: float, times: Sequence[float],
                           x: float | None = None, a: float | None = None, Y: float = 0.0,
                           tol: float = 0.05) -> TailAsymptoticsReport:
    """Normalized tail sequence along growing ``t``.

    Exactly one of ``x`` (fixed position, prefactor ``e^{sqrt2 x} t^{3/2} / log t``)
    or ``a`` (position ``x = a sqrt t``, prefactor ``e^{sqrt2 x} t^{3/2} / x`` and
    evaluation at ``x + Y``) must be given.  ``limit`` is the predicted limit
    from the first-moment integral of ``v(r, .)``; ``stabilized`` requires the
    last consecutive ratio to be within ``tol`` of 1.
    """
    if (x is None) == (a is None):
        raise ValueError("give exactly one of x or a")
    M = first_moment_integral(u_r, r)
    vals = []
    if x is not None:
        regime = "fixed_x"
        if Y:
            raise ValueError("Y applies to the x = a sqrt(t) regime only")
        limit = 1.5 / math.sqrt(math.pi) * M
        for t in times:
            vals.append(t**1.5 / math.log(t) * psi_scaled(u_r, r, t, x))
    else:
        regime = "diffusive"
        limit = math.sqrt(2 / math.pi) * M * math.exp(-SQRT2 * Y - a * a / 2)
        for t in times:
            xt = a * math.sqrt(t)
            vals.append(t**1.5 / xt * math.exp(-SQRT2 * Y) * psi_scaled(u_r, r, t, xt + Y))
    ratios = [vals[i + 1] / vals[i] if vals[i] else float("nan") for i in range(len(vals) - 1)]
    stable = bool(ratios) and all(np.isfinite(ratios)) and abs(ratios[-1] - 1) <= tol
    if M == 0:
        stable = True
    return TailAsymptoticsReport(list(times), vals, ratios, limit, stable, regime)


@dataclass(frozen=True)
class SandwichFit:
    r: float
    t: float
    X: list
    ratio: list
    gamma: float

    def to_dict(self) -> dict:
        return {"r": self.r, "t": self.t, "X": list(self.X), "ratio": list(self.ratio),
                "gamma": self.gamma}


def sandwich_ratios(u_r: SolutionField, v_t: SolutionField, r: float, t: float,
                    X_values: Sequence[float]) -> np.ndarray:
    """``v(t, X + sqrt2 t) / psi(r, t, X + sqrt2 t)`` for each X."""
    out = []
    for X in X_values:
        lab = X + SQRT2 * t
        sc = psi_scaled(u_r, r, t, X)
        log_vt = float(v_t.log_v_at_lab(lab))
        out.append(math.exp(log_vt + SQRT2 * X - math.log(sc)) if sc > 0 else float("inf"))
    return np.asarray(out)


def gamma_from_ratios(ratios) -> float:
    rho = np.asarray(ratios, dtype=float)
    return float(np.max(np.maximum(rho, 1.0 / rho)))


def fit_sandwich(r: float, t_over_r: float = 8.0, X_over_r: Sequence[float] = (6.0, 8.0, 10.0),
                 law: BranchingLaw | None = None, grid: Grid | None = None,
                 refine: bool = True, ic: InitialCondition | None = None) -> SandwichFit:
    """Fit ``gamma(r)`` on the ray ``t = t_over_r r``, ``X = k r``.

    Solves the equation to times ``r`` and ``t`` and compares the solution
    with the approximation built from ``v(r, .)``.  With ``refine`` the ratios
    are Richardson-extrapolated from ``dx`` and ``dx / 2`` (the deep tail
    carries an O(dx^2) relative error that grows with X).
    """
    law = law or BranchingLaw.binary()
    ic = ic or InitialCondition("heaviside")
    t = t_over_r * r
    Xs = [k * r for k in X_over_r]
    x_hi = max(max(Xs) + 6 * math.sqrt(t) + 20.0, 60.0)
    grid = grid or Grid(-30.0, x_hi, 0.02, 0.01)

    def ratios_on(g: Grid):
        u_r, v_t = solve(ic, law, g, t, [r, t], convention="v")
        return sandwich_ratios(u_r, v_t, r, t, Xs)

    rho = ratios_on(grid)
    if refine:
        fine = Grid(grid.x_min, grid.x_max, grid.dx / 2, grid.dt, grid.frame)
        rho = (4 * ratios_on(fine) - rho) / 3
    return SandwichFit(r, t, Xs, [float(q) for q in rho], gamma_from_ratios(rho))
