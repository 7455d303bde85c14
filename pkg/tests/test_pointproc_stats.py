import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bbm_extremal.pointproc_stats import (EmpiricalCDF, PointConfiguration, TestFunction, ZeroFunction,
                                          censored_max_cdf, compare_processes, default_panel,
                                          empirical_max_cdf, front_panel, gap_process, gap_panel,
                                          ks_distance, laplace_functional, poisson_dispersion,
                                          superposition_check, write_cdf_csv, write_panel_csv)

configs_st = st.lists(st.lists(st.floats(-6, 3), max_size=15).map(lambda p: PointConfiguration(p, "synthetic")),
                      min_size=2, max_size=20)


def test_laplace_examples(oracle):
    cfgs = [PointConfiguration([0.0, 1.0]), PointConfiguration([-2.0])]
    est = laplace_functional(cfgs, ZeroFunction())
    assert est.mean == 1.0 and est.std_error == 0.0
    assert laplace_functional([PointConfiguration([])] * 3, TestFunction("box", -1, 1)).mean == 1.0
    bump = TestFunction("bump", -1.0, 1.0, 1.0)
    assert laplace_functional([PointConfiguration([0.0])], bump).mean == pytest.approx(oracle["bump_at_center"],
                                                                                         abs=1e-15)


def test_gap_process_examples():
    assert gap_process(PointConfiguration([-2.0, 0.0, 3.0])).points.tolist() == [-5.0, -3.0, 0.0]
    assert gap_process(PointConfiguration([4.2])).points.tolist() == [0.0]
    with pytest.raises(ValueError):
        gap_process(PointConfiguration([]))


def test_empirical_max_cdf_examples():
    F = empirical_max_cdf([PointConfiguration([-1.0, 2.0])])
    assert F(1.999) == 0.0 and F(2.0) == 1.0
    F = empirical_max_cdf([PointConfiguration([0.0]), PointConfiguration([1.0])])
    assert F(0.5) == 0.5


def test_ks_examples():
    F = EmpiricalCDF(np.array([0.0]))
    assert ks_distance(F, stats.uniform.cdf) == 1.0
    assert ks_distance(F, EmpiricalCDF(np.array([0.0]))) == 0.0
    x = np.random.default_rng(0).standard_normal(10_000)
    assert ks_distance(EmpiricalCDF(x), stats.norm.cdf) < 0.02
    assert ks_distance(EmpiricalCDF(x), stats.norm.cdf) == pytest.approx(stats.kstest(x, "norm").statistic,
                                                                        abs=1e-12)


def test_dispersion_examples():
    assert poisson_dispersion([3] * 50).index == 0.0
    g = np.random.default_rng(1)
    assert 0.95 <= poisson_dispersion(g.poisson(5.0, 10_000)).index <= 1.05
    d = poisson_dispersion(g.geometric(0.2, 10_000))
    assert d.index > 1.5 and d.p_value < 0.01
    with pytest.raises(ValueError):
        poisson_dispersion([1] * 10)
    with pytest.warns(UserWarning):
        assert math.isnan(poisson_dispersion([0] * 40).index)


def _cloud(n, seed, shift=0.0):
    g = np.random.default_rng(seed)
    return [PointConfiguration(np.log(g.random(g.poisson(6))) + shift + 0.5) for _ in range(n)]


def test_compare_same_and_shifted():
    a = _cloud(2000, 2)
    rep = compare_processes(a, a)
    assert rep.passed and rep.ks == 0.0 and all(rep.overlaps)
    b = [c.shifted(1.0) for c in a]
    rep = compare_processes(a, b, front_panel())
    assert not rep.passed and rep.ks > 0.3
    assert not all(rep.overlaps)


def test_censored_comparison():
    a = _cloud(500, 3)
    with pytest.raises(ValueError):
        compare_processes(a, a, default_panel(), max_floor=-2.0)
    rep = compare_processes(a, a, front_panel(), max_floor=-2.0)
    assert rep.ks == 0.0 and "censored_fraction_a" in rep.extra
    F = censored_max_cdf([PointConfiguration([-3.0]), PointConfiguration([1.0])], -2.0)
    assert np.isinf(F.values[0])


def test_report_writers(tmp_path):
    a = _cloud(100, 4)
    rep = compare_processes(a, a)
    write_panel_csv(rep, tmp_path / "p.csv")
    write_cdf_csv(empirical_max_cdf(a), tmp_path / "c.csv")
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 1 + len(default_panel())


def test_superposition_single_start_is_identity():
    rep = superposition_check([0.0], 4.0, 50, seed=1)
    assert rep.comparison.ks == 0.0 and all(rep.comparison.overlaps)


def test_superposition_components_independent():
    from bbm_extremal.branching_engine import BranchingLaw, SimConfig, simulate_final

    res = simulate_final(SimConfig(horizon=5.0, seed=21, starts=(0.0, 0.0)), BranchingLaw.binary(), 2000)
    m0 = np.array([s.positions[s.roots == 0].max() for s in res])
    m1 = np.array([s.positions[s.roots == 1].max() for s in res])
    assert abs(np.corrcoef(m0, m1)[0, 1]) < 3 / math.sqrt(m0.size)
    assert stats.ks_2samp(m0, m1).statistic < 0.05


def test_superposition_two_starts_not_dominated():
    rep = superposition_check([0.0, 0.0], 10.0, 400, seed=2)
    assert not rep.one_sided
    assert min(rep.front_share.values()) > 0.5


@pytest.mark.xfail(strict=True, reason="at t=10 the superposition carries more points 1.5-4 below its max "
                                       "(tent[-4,-2.5] Laplace 0.41 vs 0.46, 3.4 SE); finite-t effect, "
                                       "the log-ratio shows no clear decay over t in 7..13")
def test_superposition_two_starts_panel():
    rep = superposition_check([0.0, 0.0], 10.0, 400, seed=2)
    assert all(rep.comparison.overlaps)


def test_superposition_dominated_start():
    rep = superposition_check([0.0, -50.0], 10.0, 100, seed=3)
    assert rep.one_sided
    assert rep.front_share["-50.0"] == 0.0


# invariants -----------------------------------------------------------------


@given(configs_st)
def test_laplace_in_unit_interval(cfgs):
    for phi in default_panel():
        e = laplace_functional(cfgs, phi)
        assert 0 < e.mean <= 1 and e.std_error >= 0


@given(configs_st, st.floats(0.1, 3.0))
def test_laplace_monotone_in_phi(cfgs, k):
    lo = TestFunction("tent", -2.0, 1.0, 0.5)
    hi = TestFunction("tent", -2.0, 1.0, 0.5 + k)
    assert laplace_functional(cfgs, hi).mean <= laplace_functional(cfgs, lo).mean


@given(configs_st, st.floats(-3, 3))
def test_translation_equivariance(cfgs, c):
    phi = TestFunction("bump", -1.5, 0.5, 0.7)
    shifted = [x.shifted(c) for x in cfgs]
    a = laplace_functional(shifted, phi.shifted(c)).mean
    b = laplace_functional(cfgs, phi).mean
    assert a == pytest.approx(b, abs=1e-12)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_gap_process_idempotent(xs):
    g = gap_process(PointConfiguration(xs))
    assert np.array_equal(gap_process(g).points, g.points)
    assert g.max() == 0.0


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=60))
def test_max_cdf_shape(xs):
    F = empirical_max_cdf([PointConfiguration([x]) for x in xs])
    grid = np.linspace(-11, 11, 200)
    v = F(grid)
    assert np.all(np.diff(v) >= 0) and v[0] == 0.0 and v[-1] == 1.0
    assert np.all(F(np.array(xs)) >= F.left_limit(np.array(xs)))


def test_panels_are_valid():
    for phi in default_panel() + gap_panel() + front_panel():
        x = np.linspace(phi.lo - 1, phi.hi + 1, 1001)
        y = phi(x)
        assert np.all(y >= 0) and y[0] == 0.0 and y[-1] == 0.0
        assert np.max(np.abs(np.diff(y))) < 0.1  # no jumps on a fine grid
