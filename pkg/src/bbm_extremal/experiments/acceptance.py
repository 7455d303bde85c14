"""The ten acceptance criteria, each as a function returning a :class:`CriterionResult`.

Expensive shared inputs (the t=10 BBM ensemble, Heaviside fields) are
memoized per seed so that running all criteria in one process simulates them
once.  Every criterion is evaluated at its stated tolerance; the numbers in
``measured`` are what the verdict is based on.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .. import fkpp
from ..branching_engine import BranchingLaw, SimConfig, centering_m, simulate_final
from ..cluster_sampler import (atom_mass, atom_window_diagnostic, cluster_extrema, default_window,
                               sample_atoms, sample_auxiliary_batch, sample_cluster_law)
from ..martingales import derivative_martingale_at, sample_limiting_Z
from ..pointproc_stats import (EmpiricalCDF, PointConfiguration, compare_processes, front_panel, gap_panel,
                               ks_distance, poisson_dispersion)

SQRT2 = math.sqrt(2.0)
LAW = BranchingLaw.binary()
# points of the t=10 ensemble kept for comparisons (relative to m(10))
KEEP_BELOW = 6.0
# Pi_t is produced exactly above this level (thinned sampling)
PI_LEVEL = -2.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict
    thresholds: dict
    notes: str = ""
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        vals = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        lim = ", ".join(f"{k} {v}" for k, v in self.thresholds.items())
        return f"[{'PASS' if self.passed else 'FAIL'}] #{self.number} {self.name}: {vals} (need {lim})"

    def to_dict(self) -> dict:
        return asdict(self)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _timed(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    return wrapper


# shared inputs ---------------------------------------------------------------

@dataclass(frozen=True)
class Ensemble:
    t: float
    maxima: np.ndarray      # max - m(t)
    z: np.ndarray           # Z(t) per replica (signed)
    points: list            # sorted points above -KEEP_BELOW, relative to m(t)


@functools.lru_cache(maxsize=4)
def bbm_ensemble(t: float = 10.0, replicas: int = 10_000, seed: int = 2024, prune_gap: float = 8.0) -> Ensemble:
    m = centering_m(t)

    def red(s):
        x = s.positions - m
        return float(x.max()), derivative_martingale_at(s.time, s.positions), np.sort(x[x > -KEEP_BELOW])

    res = simulate_final(SimConfig(horizon=t, seed=seed, prune_gap=prune_gap), LAW, replicas, reduce=red)
    return Ensemble(t, np.array([r[0] for r in res]), np.array([r[1] for r in res]), [r[2] for r in res])


@functools.lru_cache(maxsize=4)
def heaviside_fields(times: tuple = (50.0, 100.0), dx: float = 0.02, dt: float = 0.01):
    grid = fkpp.Grid(-40.0, 40.0, dx, dt)
    return tuple(fkpp.solve(fkpp.InitialCondition("heaviside"), LAW, grid, max(times), list(times),
                            convention="v"))


@functools.lru_cache(maxsize=2)
def wave(extrapolate: bool = False) -> fkpp.WaveProfile:
    return fkpp.wave_profile(heaviside_fields(), "by_median", extrapolate=extrapolate)


# criteria ----------------------------------------------------------------------

@_timed
def criterion_1(replicas: int = 10_000, seed: int = 2024) -> CriterionResult:
    ens = bbm_ensemble(10.0, replicas, seed)
    m = centering_m(10.0)
    field10 = fkpp.solve(fkpp.InitialCondition("heaviside"), LAW, fkpp.Grid(-40.0, 40.0, 0.02, 0.01), 10.0,
                         [10.0])[0]
    ks = ks_distance(EmpiricalCDF(ens.maxima), lambda x: field10.at_lab(np.asarray(x) + m))
    return CriterionResult(1, "McKean consistency", ks < 0.03, {"ks": ks, "replicas": replicas},
                           {"ks": "< 0.03"})


@_timed
def criterion_2() -> CriterionResult:
    p = wave(False)
    pe = wave(True)
    res_plain = fkpp.wave_ode_residual(p, LAW)
    res = fkpp.wave_ode_residual(pe, LAW)
    ok = p.discrepancy < 5e-3 and res < 1e-3
    return CriterionResult(2, "traveling-wave convergence", ok,
                           {"sup_discrepancy": p.discrepancy, "residual": res,
                            "residual_unextrapolated": res_plain},
                           {"sup_discrepancy": "< 5e-3", "residual": "< 1e-3"},
                           "residual of the 1/t-extrapolated t=100 profile; the raw t=100 profile "
                           "still carries the front-velocity lag of order 1/t")


@_timed
def criterion_3() -> CriterionResult:
    p = wave(False)
    a, b = fkpp.tail_constant(p, (5.0, 8.0)), fkpp.tail_constant(p, (6.0, 9.0))
    rel = abs(a.C - b.C) / b.C
    return CriterionResult(3, "tail constant stability", rel < 0.10,
                           {"C_5_8": a.C, "C_6_9": b.C, "relative_change": rel,
                            "within_window_variation": [a.variation, b.variation]},
                           {"relative_change": "< 0.10"})


@_timed
def criterion_4(replicas: int = 1000, seed: int = 2024) -> CriterionResult:
    p = wave(False)
    C = fkpp.tail_constant(p, (6.0, 9.0)).C
    z = bbm_ensemble(10.0, 10_000, seed).z[:replicas]
    z = z[z > 0]
    xs = np.linspace(-3.0, 4.0, 701)
    ks = float(np.max(np.abs(fkpp.gumbel_mixture_cdf(xs, C, z) - p(xs))))
    best = min((float(np.max(np.abs(fkpp.gumbel_mixture_cdf(xs, c, z) - p(xs)))), float(c))
               for c in np.linspace(0.5 * C, 2 * C, 151))
    return CriterionResult(4, "Lalley-Sellke mixture", ks < 0.02,
                           {"ks": ks, "C": C, "best_C": best[1], "ks_best_C": best[0], "z_samples": int(z.size)},
                           {"ks": "< 0.02"},
                           "Z(10) is a finite-horizon proxy; even the best constant leaves a shape gap")


@functools.lru_cache(maxsize=2)
def auxiliary_configs(samples: int = 10_000, seed: int = 2025):
    Z = sample_limiting_Z(10.0, samples, seed=seed)
    z = np.resize(Z.samples, samples)
    S = sample_auxiliary_batch(10.0, z, seed=seed, mode="thinned", level=PI_LEVEL, prune_gap=6.0)
    return [PointConfiguration(s.assembled.points[s.assembled.points > PI_LEVEL], "Pi_t") for s in S]


@_timed
def criterion_5(samples: int = 10_000, seed: int = 2024) -> CriterionResult:
    ens = bbm_ensemble(10.0, samples, seed)
    E = [PointConfiguration(p[p > PI_LEVEL], "E_t") for p in ens.points]
    Pi = auxiliary_configs(samples, seed + 1)
    rep = compare_processes(E, Pi, front_panel(), ks_threshold=0.05, max_floor=PI_LEVEL)
    return CriterionResult(5, "main theorem at t=10", rep.passed,
                           {"panel_overlaps": [bool(o) for o in rep.overlaps], "max_law_ks": rep.ks},
                           {"panel": "all 5 overlap", "max_law_ks": "< 0.05"},
                           f"both sides compared above {PI_LEVEL}", details=rep.to_dict())


@_timed
def criterion_6(samples: int = 10_000, seed: int = 6, t: float = 16.0) -> CriterionResult:
    S = sample_auxiliary_batch(t, np.ones(samples), seed=seed, mode="maxima", level=0.0)
    ce = [cluster_extrema(s) for s in S]
    n0 = np.array([c.count_in(0.0, 1.0) for c in ce])
    n1 = np.array([c.count_in(1.0, 2.0) for c in ce])
    d0, d1 = poisson_dispersion(n0), poisson_dispersion(n1)
    ratio = n1.mean() / n0.mean()
    target = math.exp(-SQRT2)
    ok = 0.8 <= d0.index <= 1.2 and 0.8 <= d1.index <= 1.2 and abs(ratio / target - 1) <= 0.10
    return CriterionResult(6, "cluster-extrema Poissonianity", ok,
                           {"dispersion": [d0.index, d1.index], "ratio": ratio, "target": target,
                            "relative_error": ratio / target - 1},
                           {"dispersion": "in [0.8, 1.2]", "ratio": "e^-sqrt2 +- 10%"},
                           f"z=1, t={t:g}; the finite-t ratio approaches the limit like t^-1/2")


@_timed
def criterion_7(samples: int = 2000, seed: int = 7, panel_samples: int = 2000) -> CriterionResult:
    r = sample_cluster_law(16.0, 0.7, n_samples=samples, seed=seed)
    o = r.overshoots
    ks = float(stats.kstest(o, stats.expon(scale=1 / SQRT2).cdf).statistic)
    a = sample_cluster_law(16.0, 0.5, n_samples=panel_samples, seed=seed + 1)
    b = sample_cluster_law(16.0, 1.0, n_samples=panel_samples, seed=seed + 2)
    rep = compare_processes(a.gap_processes, b.gap_processes, gap_panel())
    ok = ks < 0.05 and all(rep.overlaps)
    return CriterionResult(7, "exponential overshoot", ok,
                           {"ks": ks, "median": float(np.median(o)), "acceptance_rate": r.acceptance_rate,
                            "panel_overlaps": [bool(x) for x in rep.overlaps]},
                           {"ks": "< 0.05", "panel": "all overlap"}, "t=16, a=0.7, spine sampler",
                           details=rep.to_dict())


@_timed
def criterion_8(samples: int = 100_000, seed: int = 8, z_seed: int = 2024) -> CriterionResult:
    z = bbm_ensemble(10.0, 10_000, z_seed).z
    z = np.resize(z[z > 0], samples)
    S = sample_auxiliary_batch(16.0, z, window=default_window(16.0, 0.01, 6.0), seed=seed, mode="maxima",
                               level=0.0)
    rep = atom_window_diagnostic(16.0, 0.0, S)
    ok = (not rep.underpowered and abs(rep.hist_mode - SQRT2) <= 0.2 and rep.mass_outside < 0.10)
    return CriterionResult(8, "atom window", ok,
                           {"hist_mode": rep.hist_mode, "kde_mode": rep.kde_mode,
                            "mass_outside": rep.mass_outside, "atoms": rep.n_atoms},
                           {"hist_mode": "sqrt2 +- 0.2", "mass_outside": "< 0.10"},
                           "z from Z(10) samples; atoms drawn on z in [0.01, 6]")


@_timed
def criterion_9() -> CriterionResult:
    fits = [fkpp.fit_sandwich(r) for r in (4.0, 8.0, 16.0)]
    g = [f.gamma for f in fits]
    ok = g[0] > g[1] > g[2] and g[2] <= 1.2
    return CriterionResult(9, "psi sandwich", ok, {"gamma": g}, {"gamma": "decreasing, <= 1.2 at r=16"},
                           "ray t=8r, X in {6r, 8r, 10r}")


@_timed
def criterion_10(seed: int = 10) -> CriterionResult:
    from .reproducibility import rerun_digests

    g = np.random.default_rng(seed)
    A, B, t, steps = 1.5, 0.8, 3.0, 1000
    p_mc, se = fkpp.bridge_below_line_mc(A, B, t, 100_000, steps, g)
    s = fkpp.DISCRETE_MONITORING_SHIFT * math.sqrt(t / steps)
    p_ref = fkpp.bridge_below_line_prob(A + s, B + s, t)
    bridge_z = (p_mc - p_ref) / se
    lam = atom_mass((-1.0, 0.0))
    counts = np.array([len(sample_atoms((-1.0, 0.0), g)) for _ in range(100_000)])
    count_z = (counts.mean() - lam) / (counts.std(ddof=1) / math.sqrt(counts.size))
    digests = rerun_digests()
    same = all(a == b for a, b in digests.values())
    ok = abs(bridge_z) < 3 and abs(count_z) < 3 and same
    return CriterionResult(10, "deterministic infrastructure", ok,
                           {"bridge_mc": p_mc, "bridge_ref": p_ref, "bridge_z": bridge_z,
                            "mean_count": float(counts.mean()), "Lambda": lam, "count_z": float(count_z),
                            "bit_identical": same},
                           {"bridge_z": "|.| < 3", "count_z": "|.| < 3", "reruns": "bit-identical"},
                           "bridge MC on a 1000-step grid, compared after the discrete-monitoring shift",
                           details={"digests": {k: list(v) for k, v in digests.items()},
                                    "bridge_exact": fkpp.bridge_below_line_prob(A, B, t)})


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


def run_all(numbers=None) -> list[CriterionResult]:
    return [CRITERIA[n]() for n in (numbers or sorted(CRITERIA))]
