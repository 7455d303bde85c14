"""Point configurations and the statistics used to compare point processes.

Laplace functionals ``E exp(-sum phi(p))``, gap processes, empirical max
laws, Kolmogorov-Smirnov distances and Poisson dispersion tests.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

ORIGINS = ("E_t", "Pi_t", "D", "synthetic")
BOX_MOLLIFY = 0.05


@dataclass(frozen=True, eq=False)
class PointConfiguration:
    """Finite multiset of reals kept sorted ascending."""

    points: np.ndarray
    origin: str = "synthetic"

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float).ravel())
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown origin {self.origin!r}")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size

    def __eq__(self, other):
        return (isinstance(other, PointConfiguration) and self.origin == other.origin
                and np.array_equal(self.points, other.points))

    @property
    def empty(self) -> bool:
        return self.points.size == 0

    def max(self) -> float:
        if self.empty:
            raise ValueError("empty configuration has no maximum")
        return float(self.points[-1])

    def shifted(self, c: float) -> "PointConfiguration":
        return PointConfiguration(self.points + c, self.origin)

    def count_in(self, lo: float, hi: float) -> int:
        """Number of points in ``[lo, hi)``."""
        return int(np.searchsorted(self.points, hi, "left") - np.searchsorted(self.points, lo, "left"))

    def above(self, level: float) -> "PointConfiguration":
        return PointConfiguration(self.points[self.points > level], self.origin)


@dataclass(frozen=True)
class TestFunction:
    """Nonnegative continuous test function with compact support.

    ``box`` is a plateau of ``height`` with linear ramps of width ``mollify``
    inside the support; ``tent`` peaks at the midpoint; ``bump`` is the smooth
    ``exp(1 - 1/(1 - s^2))`` profile, equal to ``height`` at the midpoint.
    """

    __test__ = False  # not a pytest class

    family: str
    lo: float
    hi: float
    height: float = 1.0
    mollify: float = BOX_MOLLIFY

    def __post_init__(self):
        if self.family not in ("box", "tent", "bump"):
            raise ValueError(f"unknown family {self.family!r}")
        if not self.hi > self.lo:
            raise ValueError("support must have positive length")
        if self.height < 0:
            raise ValueError("height must be non-negative")
        if self.family == "box" and not 0 < self.mollify <= (self.hi - self.lo) / 2:
            raise ValueError("mollification width must fit in the support")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mid, half = 0.5 * (self.lo + self.hi), 0.5 * (self.hi - self.lo)
        if self.family == "box":
            w = self.mollify
            out = np.clip(np.minimum(x - self.lo, self.hi - x) / w, 0.0, 1.0)
        elif self.family == "tent":
            out = np.clip(1.0 - np.abs(x - mid) / half, 0.0, 1.0)
        else:
            s = (x - mid) / half
            inside = np.abs(s) < 1
            out = np.zeros_like(x)
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return self.height * out

    def shifted(self, c: float) -> "TestFunction":
        """``phi(. - c)``."""
        return TestFunction(self.family, self.lo + c, self.hi + c, self.height, self.mollify)

    @property
    def descriptor(self) -> str:
        extra = f",w={self.mollify:g}" if self.family == "box" else ""
        return f"{self.family}[{self.lo:g},{self.hi:g}]h={self.height:g}{extra}"

    def to_dict(self) -> dict:
        return {"family": self.family, "lo": self.lo, "hi": self.hi, "height": self.height,
                "mollify": self.mollify}


class ZeroFunction:
    """``phi = 0`` (support-free), handy as a degenerate test function."""

    descriptor = "zero"

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def shifted(self, c):
        return self


def default_panel() -> list[TestFunction]:
    """Five test functions over [-4, 2]; heights keep the functionals away from 0 and 1."""
    return [
        TestFunction("box", -1.0, 1.0, 0.5),
        TestFunction("box", -3.0, -2.0, 0.02),
        TestFunction("tent", -2.0, 0.0, 0.3),
        TestFunction("tent", -4.0, -2.5, 0.005),
        TestFunction("bump", -1.5, 2.0, 1.0),
    ]


@dataclass(frozen=True)
class LaplaceEstimate:
    mean: float
    std_error: float
    replicas: int
    phi: str

    def ci(self, level: float = 0.95) -> tuple[float, float]:
        z = stats.norm.ppf(0.5 + level / 2)
        return self.mean - z * self.std_error, self.mean + z * self.std_error

    def to_dict(self, level: float = 0.95) -> dict:
        lo, hi = self.ci(level)
        return {"phi": self.phi, "mean": self.mean, "std_error": self.std_error,
                "replicas": self.replicas, "ci_lo": lo, "ci_hi": hi}


def _descriptor(phi) -> str:
    return getattr(phi, "descriptor", repr(phi))


def laplace_samples(configs: Sequence[PointConfiguration], phi: Callable) -> np.ndarray:
    """Per-configuration values ``exp(-sum phi(p))``; empty configurations give 1."""
    out = np.ones(len(configs))
    for i, c in enumerate(configs):
        if len(c):
            out[i] = math.exp(-float(np.sum(phi(c.points))))
    return out


def laplace_functional(configs: Sequence[PointConfiguration], phi: Callable) -> LaplaceEstimate:
    if len(configs) == 0:
        raise ValueError("no configurations")
    s = laplace_samples(configs, phi)
    n = s.size
    se = float(s.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return LaplaceEstimate(float(s.mean()), se, n, _descriptor(phi))


def gap_process(config: PointConfiguration) -> PointConfiguration:
    """Points measured from the maximum; the output maximum is exactly 0."""
    if config.empty:
        raise ValueError("gap process of an empty configuration")
    return PointConfiguration(config.points - config.points[-1], config.origin)


@dataclass(frozen=True)
class EmpiricalCDF:
    """Right-continuous empirical distribution function."""

    values: np.ndarray
    skipped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", np.sort(np.asarray(self.values, dtype=float)))

    @property
    def n(self) -> int:
        return self.values.size

    def __call__(self, x):
        if self.n == 0:
            raise ValueError("empty empirical CDF")
        r = np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.n
        return float(r) if np.ndim(x) == 0 else r

    def left_limit(self, x):
        return np.searchsorted(self.values, np.asarray(x, dtype=float), side="left") / self.n

    def to_rows(self) -> list[tuple[float, float]]:
        """Plot-ready (x, F(x)) pairs at the jumps."""
        u, idx = np.unique(self.values, return_index=True)
        Fs = np.searchsorted(self.values, u, side="right") / self.n
        return list(zip(u.tolist(), Fs.tolist()))


def empirical_max_cdf(configs: Sequence[PointConfiguration]) -> EmpiricalCDF:
    maxima = [c.points[-1] for c in configs if len(c)]
    skipped = len(configs) - len(maxima)
    if skipped:
        warnings.warn(f"{skipped} empty configurations skipped", stacklevel=2)
    return EmpiricalCDF(np.asarray(maxima, dtype=float), skipped)


def ks_distance(empirical: EmpiricalCDF, reference) -> float:
    """``sup |F_emp - F_ref|``.

    ``reference`` is a callable CDF (assumed continuous) or another
    :class:`EmpiricalCDF`, in which case the two-sample statistic is returned.
    """
    if empirical.n == 0:
        raise ValueError("empty empirical CDF")
    if isinstance(reference, EmpiricalCDF):
        if reference.n == 0:
            raise ValueError("empty reference CDF")
        pts = np.concatenate([empirical.values, reference.values])
        return float(np.max(np.abs(empirical(pts) - reference(pts))))
    x = empirical.values
    F = np.asarray(reference(x), dtype=float)
    hi = empirical(x)
    lo = empirical.left_limit(x)
    return float(max(np.max(hi - F), np.max(F - lo), 0.0))


class Dispersion(NamedTuple):
    index: float
    p_value: float


def poisson_dispersion(counts: Sequence[int], min_counts: int = 30) -> Dispersion:
    """Variance-to-mean index and two-sided chi-square p-value."""
    c = np.asarray(counts, dtype=float)
    if c.size < min_counts:
        raise ValueError(f"need at least {min_counts} counts")
    mean = c.mean()
    if mean == 0:
        warnings.warn("all counts are zero: dispersion undefined", stacklevel=2)
        return Dispersion(float("nan"), float("nan"))
    index = float(c.var(ddof=1) / mean)
    chi2 = float(((c - mean) ** 2).sum() / mean)
    dof = c.size - 1
    p = 2 * min(stats.chi2.sf(chi2, dof), stats.chi2.cdf(chi2, dof))
    return Dispersion(index, float(min(p, 1.0)))


@dataclass
class ComparisonReport:
    estimates_a: list
    estimates_b: list
    overlaps: list
    ks: float
    ks_threshold: float
    level: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        rows = []
        for ea, eb, ok in zip(self.estimates_a, self.estimates_b, self.overlaps):
            rows.append({"phi": ea.phi, "a": ea.to_dict(self.level), "b": eb.to_dict(self.level),
                         "overlap": ok})
        return {"panel": rows, "max_law_ks": self.ks, "ks_threshold": self.ks_threshold,
                "level": self.level, "passed": self.passed, **self.extra}

    def rows(self) -> list[dict]:
        out = []
        for ea, eb, ok in zip(self.estimates_a, self.estimates_b, self.overlaps):
            a_lo, a_hi = ea.ci(self.level)
            b_lo, b_hi = eb.ci(self.level)
            out.append({"phi": ea.phi, "mean_a": ea.mean, "se_a": ea.std_error, "ci_lo_a": a_lo,
                        "ci_hi_a": a_hi, "mean_b": eb.mean, "se_b": eb.std_error, "ci_lo_b": b_lo,
                        "ci_hi_b": b_hi, "overlap": ok})
        return out


def cis_overlap(a: LaplaceEstimate, b: LaplaceEstimate, level: float = 0.95) -> bool:
    a_lo, a_hi = a.ci(level)
    b_lo, b_hi = b.ci(level)
    return a_lo <= b_hi and b_lo <= a_hi


def censored_max_cdf(configs: Sequence[PointConfiguration], floor: float) -> EmpiricalCDF:
    """Law of ``max`` with every maximum below ``floor`` (or empty config) sent to ``-inf``.

    For samples that are only exact above ``floor`` this is the part of the
    max law that can be compared.
    """
    m = np.array([c.points[-1] if len(c) else -np.inf for c in configs], dtype=float)
    return EmpiricalCDF(np.where(m >= floor, m, -np.inf))


def compare_processes(a: Sequence[PointConfiguration], b: Sequence[PointConfiguration],
                      phi_panel: Sequence[Callable] | None = None, ks_threshold: float = 0.05,
                      level: float = 0.95, max_floor: float | None = None) -> ComparisonReport:
    """Laplace panel with CI-overlap verdicts plus the two-sample max-law KS.

    With ``max_floor`` the max laws are compared after censoring maxima below
    the floor (see :func:`censored_max_cdf`), and every panel function must
    vanish below the floor.
    """
    if not len(a) or not len(b):
        raise ValueError("both samples must be nonempty")
    panel = list(phi_panel) if phi_panel is not None else default_panel()
    if max_floor is not None:
        low = [getattr(phi, "descriptor", "phi") for phi in panel if getattr(phi, "lo", max_floor) < max_floor]
        if low:
            raise ValueError(f"panel functions {low} reach below the floor {max_floor}")
    ea = [laplace_functional(a, phi) for phi in panel]
    eb = [laplace_functional(b, phi) for phi in panel]
    overlaps = [cis_overlap(x, y, level) for x, y in zip(ea, eb)]
    if max_floor is None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ks = ks_distance(empirical_max_cdf(a), empirical_max_cdf(b))
        extra = {}
    else:
        Fa, Fb = censored_max_cdf(a, max_floor), censored_max_cdf(b, max_floor)
        ks = ks_distance(Fa, Fb)
        extra = {"max_floor": max_floor,
                 "censored_fraction_a": float(np.mean(np.isinf(Fa.values))),
                 "censored_fraction_b": float(np.mean(np.isinf(Fb.values)))}
    return ComparisonReport(ea, eb, overlaps, ks, ks_threshold, level,
                            bool(all(overlaps) and ks < ks_threshold), extra)


def front_panel() -> list[TestFunction]:
    """Five test functions supported in [-2, 2], for samples exact only above -2."""
    return [
        TestFunction("box", -1.0, 1.0, 0.5),
        TestFunction("box", -2.0, -1.0, 0.2),
        TestFunction("tent", -2.0, 0.0, 0.3),
        TestFunction("tent", 0.0, 2.0, 0.5),
        TestFunction("bump", -1.5, 2.0, 1.0),
    ]


def best_shift_ks(a: EmpiricalCDF, b: EmpiricalCDF, span: float = 3.0) -> tuple[float, float]:
    """Shift ``s`` minimizing the KS distance between ``a`` and ``b + s``."""
    def ks_at(s):
        return ks_distance(a, EmpiricalCDF(b.values + s))

    grid = np.linspace(-span, span, 301)
    vals = [ks_at(s) for s in grid]
    s0 = grid[int(np.argmin(vals))]
    fine = np.linspace(s0 - 0.02, s0 + 0.02, 81)
    vals = [ks_at(s) for s in fine]
    i = int(np.argmin(vals))
    return float(fine[i]), float(vals[i])


@dataclass
class SuperpositionReport:
    starts: list
    t: float
    comparison: ComparisonReport
    shift: float
    shifted_ks: float
    front_share: dict
    one_sided: bool
    passed: bool

    def to_dict(self) -> dict:
        return {"starts": self.starts, "t": self.t, "gap_panel": self.comparison.to_dict(),
                "max_law_shift": self.shift, "shifted_max_ks": self.shifted_ks,
                "front_share": self.front_share, "one_sided_domination": self.one_sided,
                "passed": self.passed}


def superposition_check(starts: Sequence[float], t: float, replicas: int, seed: int = 0,
                        prune_gap: float | None = 8.0, panel: Sequence[Callable] | None = None,
                        front_window: float = 4.0, level: float = 0.95,
                        ks_threshold: float = 0.05, law=None) -> SuperpositionReport:
    """Compare the gap process of a superposition of BBMs with that of a single BBM.

    The superposed run starts one particle at each entry of ``starts``; the
    reference is an independent single BBM started at 0.  Max laws are
    compared after fitting the best scalar shift.  ``front_share`` counts, for
    each start, the fraction of replicas in which one of its descendants lies
    within ``front_window`` of the overall maximum; a start that never does
    is reported as dominated.
    """
    from .branching_engine import BranchingLaw, SimConfig, simulate_final
    from .branching_engine.diagnostics import max_displacement

    starts = [float(s) for s in starts]
    if not starts:
        raise ValueError("need at least one start")
    law = law or BranchingLaw.binary()
    cfg_sup = SimConfig(horizon=t, seed=seed, prune_gap=prune_gap, starts=tuple(starts))
    cfg_one = SimConfig(horizon=t, seed=seed + 1 if len(starts) > 1 else seed, prune_gap=prune_gap)
    sup = simulate_final(cfg_sup, law, replicas)
    one = sup if len(starts) == 1 else simulate_final(cfg_one, law, replicas)
    gaps_sup = [gap_process(PointConfiguration(s.positions, "E_t")) for s in sup]
    gaps_one = [gap_process(PointConfiguration(s.positions, "E_t")) for s in one]
    panel = list(panel) if panel is not None else gap_panel()
    comp = compare_processes(gaps_sup, gaps_one, panel, ks_threshold, level)
    F_sup = EmpiricalCDF(np.array([max_displacement(s) for s in sup]))
    F_one = EmpiricalCDF(np.array([max_displacement(s) for s in one]))
    shift, sks = best_shift_ks(F_sup, F_one)
    share = {}
    for j, s0 in enumerate(starts):
        hits = 0
        for s in sup:
            top = s.positions.max()
            near = s.roots == j
            if np.any(s.positions[near] >= top - front_window):
                hits += 1
        share[str(s0) if starts.count(s0) == 1 else f"{s0}#{j}"] = hits / max(len(sup), 1)
    one_sided = len(starts) > 1 and min(share.values()) == 0.0
    passed = all(comp.overlaps) and sks < ks_threshold
    return SuperpositionReport(starts, t, comp, shift, sks, share, one_sided, passed)


def gap_panel() -> list[TestFunction]:
    """Panel for gap processes (points in (-inf, 0] with one point at 0)."""
    return [
        TestFunction("box", -1.0, 0.5, 0.3),
        TestFunction("box", -2.5, -1.5, 0.1),
        TestFunction("tent", -2.0, 0.0, 0.2),
        TestFunction("tent", -4.0, -2.5, 0.01),
        TestFunction("bump", -3.0, -0.5, 0.1),
    ]


def write_report_json(report, path) -> None:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    Path(path).write_text(json.dumps(data, indent=2, default=float))


def write_panel_csv(report: ComparisonReport, path) -> None:
    rows = report.rows()
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()) if rows else ["phi"])
        w.writeheader()
        w.writerows(rows)


def write_cdf_csv(cdf: EmpiricalCDF, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "F"])
        w.writerows(cdf.to_rows())
