"""Constants defined through F-KPP tails: ``C(phi)`` and its cutoff version.

``C(phi) = lim_t sqrt(2/pi) int_0^inf v(t, y + sqrt2 t) y e^{sqrt2 y} dy`` where
``v = 1 - u`` and ``u(0, x) = exp(-phi(-x))`` (times ``1{-x <= delta}`` for the
cutoff version).  The finite-t integral approaches its limit like
``t^{-1/2}``; the optional extrapolation removes that term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..branching_engine.law import BranchingLaw
from .bramson import first_moment_integral
from .solver import Grid, InitialCondition, solve

UNCONVERGED_DRIFT = 0.05


@dataclass(frozen=True)
class LaplaceConstant:
    C: float
    drift: float
    times: list
    raw: list
    extrapolated: bool
    converged: bool
    phi: str
    delta: float | None

    def to_dict(self) -> dict:
        return {"phi": self.phi, "delta": self.delta, "C": self.C, "drift": self.drift,
                "times": self.times, "raw": self.raw, "extrapolated": self.extrapolated,
                "converged": self.converged}


def tail_integral(field, t: float) -> float:
    """``sqrt(2/pi) int_0^inf v(t, y + sqrt2 t) y e^{sqrt2 y} dy`` for one field."""
    return math.sqrt(2 / math.pi) * first_moment_integral(field, t)


def _sqrt_extrapolate(t1, c1, t2, c2) -> float:
    a, b = math.sqrt(t1), math.sqrt(t2)
    return (b * c2 - a * c1) / (b - a)


def initial_condition_for(phi: Callable | None, delta: float | None) -> InitialCondition:
    if phi is None:
        if delta is None:
            return InitialCondition("tabulated", values=1.0)
        return InitialCondition("heaviside", shift=-delta)
    if delta is None:
        return InitialCondition("exp_phi", phi=phi)
    return InitialCondition("exp_phi_cutoff", phi=phi, delta=delta)


def laplace_constant(phi: Callable | None = None, delta: float | None = None,
                     law: BranchingLaw | None = None, grid: Grid | None = None,
                     times: Sequence[float] = (100.0, 300.0), extrapolate: bool = False) -> LaplaceConstant:
    """Tail-integral constant for ``u(0, x) = exp(-phi(-x)) [1{-x <= delta}]``.

    ``phi=None`` means ``phi = 0``.  The integral is evaluated at every time
    in ``times``.  Without extrapolation the value is the last one and
    ``drift`` the relative change between the last two.  With extrapolation
    consecutive pairs are combined as ``(sqrt t2 c2 - sqrt t1 c1) / (sqrt t2 - sqrt t1)``;
    with three or more times ``drift`` compares the last two extrapolants.
    """
    law = law or BranchingLaw.binary()
    times = sorted(float(t) for t in times)
    if len(times) < 2:
        raise ValueError("need at least two times")
    if grid is None:
        hi = max(60.0, 6 * math.sqrt(times[-1]) + 30.0)
        grid = Grid(-40.0, hi, 0.02, 0.01)
    ic = initial_condition_for(phi, delta)
    fields = solve(ic, law, grid, times[-1], times, convention="v", monitor_front=False)
    raw = [tail_integral(f, f.time) for f in fields]
    desc = getattr(phi, "descriptor", "zero" if phi is None else repr(phi))

    def rel(a, b):
        if a == b:
            return 0.0
        return abs(a - b) / max(abs(a), abs(b))

    if extrapolate:
        ext = [_sqrt_extrapolate(times[i], raw[i], times[i + 1], raw[i + 1])
               for i in range(len(times) - 1)]
        C = ext[-1]
        drift = rel(ext[-1], ext[-2]) if len(ext) >= 2 else rel(raw[-1], raw[-2])
    else:
        C = raw[-1]
        drift = rel(raw[-1], raw[-2])
    return LaplaceConstant(float(C), float(drift), times, [float(r) for r in raw], extrapolate,
                           drift <= UNCONVERGED_DRIFT, desc, delta)


def laplace_functional_pde(phi: Callable, t: float, law: BranchingLaw | None = None,
                           grid: Grid | None = None, center: float | None = None) -> float:
    """``E exp(-sum phi(x_k(t) - center))`` computed as ``u(t, center)``."""
    from .waves import centering_m

    law = law or BranchingLaw.binary()
    grid = grid or Grid(-40.0, 40.0, 0.02, 0.01)
    center = centering_m(t) if center is None else center
    f = solve(InitialCondition("exp_phi", phi=phi), law, grid, t, [t], convention="v",
              monitor_front=False)[0]
    return float(1.0 - np.interp(center, f.lab_x, f.v))
