import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from bbm_extremal.cluster_sampler import (AuxiliarySample, PoissonAtoms, assemble_limit_process, atom_mass,
                                          atom_window_diagnostic, cluster_extrema, default_window, intensity,
                                          limit_atoms, reference_cdf, reference_density, sample_atoms,
                                          sample_auxiliary, sample_auxiliary_batch, sample_cluster_law)
from bbm_extremal.cluster_sampler.io import (read_auxiliary_points, read_cluster_pool, write_auxiliary_csv,
                                             write_cluster_pool)
from bbm_extremal.fkpp import laplace_constant
from bbm_extremal.pointproc_stats import PointConfiguration, compare_processes, gap_panel, poisson_dispersion

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def atom_draws():
    g = np.random.default_rng(101)
    return [sample_atoms((-2.0, 0.0), g) for _ in range(100_000)]


@pytest.fixture(scope="module")
def pool():
    return sample_cluster_law(8.0, 0.7, n_samples=200, seed=5)


# atoms ----------------------------------------------------------------------


def test_zero_window_is_empty():
    g = np.random.default_rng(0)
    assert all(len(sample_atoms((-1.0, -1.0), g)) == 0 for _ in range(100))
    assert atom_mass((-1.0, -1.0)) == 0.0


def test_unbounded_window_rejected():
    with pytest.raises(ValueError, match="infinite mass"):
        sample_atoms((-np.inf, 0.0), np.random.default_rng(0))


def test_intensity_and_mass(oracle):
    assert float(intensity(-1.0)) == pytest.approx(oracle["intensity_at_minus_1"], abs=1e-8)
    assert float(intensity(0.5)) == 0.0
    assert atom_mass((-1.0, 0.0)) == pytest.approx(oracle["atom_mass_minus1_0"], abs=1e-8)
    assert atom_mass((-3.0, -1.0)) == pytest.approx(oracle["atom_mass_minus3_minus1"], rel=1e-10)


def test_atoms_in_window(atom_draws):
    for a in atom_draws[:2000]:
        assert np.all((a.positions >= -2.0) & (a.positions <= 0.0))
        assert np.all(np.diff(a.positions) >= 0)


def test_mean_count(oracle):
    g = np.random.default_rng(102)
    n = np.array([len(sample_atoms((-1.0, 0.0), g)) for _ in range(100_000)])
    assert abs(n.mean() - oracle["atom_mass_minus1_0"]) < 3 * n.std(ddof=1) / math.sqrt(n.size)


def test_subwindow_counts_poisson(atom_draws):
    a = np.array([d.count_in(-2.0, -1.0) for d in atom_draws])
    b = np.array([d.count_in(-1.0, 0.0 + 1e-300) for d in atom_draws])
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
    for c in (a, b):
        assert 0.9 <= poisson_dispersion(c).index <= 1.1
    # positions follow the normalized intensity on the window
    pts = np.concatenate([d.positions for d in atom_draws[:20_000]])
    lam = atom_mass((-2.0, 0.0))
    cdf = np.vectorize(lambda x: atom_mass((-2.0, x)) / lam)
    assert stats.kstest(pts, cdf).statistic < 0.01


# auxiliary samples ----------------------------------------------------------


def test_empty_atoms_give_empty_configuration():
    s = sample_auxiliary(4.0, 1.0, window=(-1.0, -1.0), seed=1)
    assert len(s.atoms) == 0 and len(s.assembled) == 0
    assert len(cluster_extrema(s)) == 0


def test_time_zero_is_exact():
    z = 2.5
    s = sample_auxiliary(0.0, z, window=(-3.0, -0.5), seed=4)
    assert len(s.atoms) > 0
    expect = np.sort(math.log(z) / SQRT2 + s.atoms.positions)
    assert np.array_equal(np.sort(s.assembled.points), expect)


def test_reassembly_and_bound():
    for s in sample_auxiliary_batch(3.0, [0.5, 1.0, 3.0], window=(-3.0, -0.5), seed=8):
        assert np.allclose(np.sort(s.assembled.points), s.reassemble(), atol=1e-12, rtol=0)
        if len(s.atoms):
            assert s.assembled.points.max() <= s.shift + s.atom_maxima.max() + 1e-12


def test_batches_are_reproducible():
    a = sample_auxiliary_batch(3.0, [1.0] * 6, window=(-3.0, -0.5), seed=9)
    b = sample_auxiliary_batch(3.0, [1.0] * 3, window=(-3.0, -0.5), seed=9, first_sample=3)
    for x, y in zip(a[3:], b):
        assert np.array_equal(x.assembled.points, y.assembled.points)


def test_auxiliary_rejects_bad_inputs():
    with pytest.raises(ValueError):
        sample_auxiliary(4.0, 0.0)
    with pytest.raises(ValueError):
        sample_auxiliary(4.0, 1.0, mode="thinned")
    with pytest.raises(ValueError):
        sample_auxiliary(16.0, 1.0, window=default_window(16.0, 0.01, 6.0))


def test_thinned_matches_full_above_level():
    # the thinned sampler keeps exactly the points above the level
    w, level, n = (-3.0, -0.5), -1.0, 600
    full = sample_auxiliary_batch(4.0, np.ones(n), window=w, seed=21, prune_gap=None)
    thin = sample_auxiliary_batch(4.0, np.ones(n), window=w, seed=22, mode="thinned", level=level)
    cf = np.array([np.sum(s.assembled.points > level) for s in full])
    ct = np.array([np.sum(s.assembled.points > level) for s in thin])
    se = math.sqrt(cf.var(ddof=1) / n + ct.var(ddof=1) / n)
    assert abs(cf.mean() - ct.mean()) < 3 * se
    mf = [s.assembled.points.max() for s in full if s.assembled.points.size and s.assembled.points.max() > level]
    mt = [s.assembled.points.max() for s in thin if s.assembled.points.size and s.assembled.points.max() > level]
    assert stats.ks_2samp(mf, mt).pvalue > 0.001


# cluster extrema ------------------------------------------------------------


def _manual_sample(etas, offspring, z=1.0):
    atoms = PoissonAtoms(np.asarray(etas, float), (-10.0, 0.0), 1.0)
    offs = [PointConfiguration(o, "synthetic") for o in offspring]
    pts = np.concatenate([math.log(z) / SQRT2 + e + o.points for e, o in zip(atoms.positions, offs)])
    return AuxiliarySample(1.0, z, atoms, offs, PointConfiguration(pts, "Pi_t"))


def test_cluster_extrema_examples():
    assert cluster_extrema(_manual_sample([-2.0], [[-3.0, -1.0]])).points.tolist() == [-3.0]
    s = _manual_sample([-2.0, -1.0, -0.5], [[0.0], [-1.0, 0.5], [-4.0, -2.0]])
    assert len(cluster_extrema(s)) == 3


def test_cluster_extrema_poisson_dispersion():
    S = sample_auxiliary_batch(16.0, np.ones(10_000), seed=6, mode="maxima", level=0.0)
    ce = [cluster_extrema(s) for s in S]
    n0 = np.array([c.count_in(0.0, 1.0) for c in ce])
    n1 = np.array([c.count_in(1.0, 2.0) for c in ce])
    assert 0.8 <= poisson_dispersion(n0).index <= 1.2
    assert 0.8 <= poisson_dispersion(n1).index <= 1.2


@pytest.mark.xfail(strict=True, reason="measured interval ratio 0.180 at t=16 and 10^4 samples vs "
                                       "e^-sqrt2 = 0.243; finite-t intensity shape, see criterion 6")
def test_cluster_extrema_intensity_ratio(oracle):
    S = sample_auxiliary_batch(16.0, np.ones(10_000), seed=6, mode="maxima", level=0.0)
    ce = [cluster_extrema(s) for s in S]
    n0 = np.array([c.count_in(0.0, 1.0) for c in ce])
    n1 = np.array([c.count_in(1.0, 2.0) for c in ce])
    assert n1.mean() / n0.mean() == pytest.approx(oracle["exp_minus_sqrt2"], rel=0.10)


@pytest.mark.xfail(strict=True, reason="measured KS to exp(-C e^-sqrt2 x) with C=0.51: 0.137 at t=16, "
                                       "0.045 at t=64, 0.040 at t=256; best-fit constant 0.36/0.46/0.56")
def test_max_law_identity():
    C = laplace_constant(None, 0.0, times=(100.0, 300.0), extrapolate=True).C
    S = sample_auxiliary_batch(16.0, np.ones(10_000), window=default_window(16.0, 0.01, 6.0), seed=3,
                               mode="maxima", level=-2.0)
    M = np.sort([cluster_extrema(s).points.max() if len(s.atoms) else -np.inf for s in S])
    xs = np.linspace(-2.0, 5.0, 701)
    emp = np.searchsorted(M, xs, side="right") / M.size
    assert np.max(np.abs(emp - np.exp(-C * np.exp(-SQRT2 * xs)))) < 0.03


# cluster law ----------------------------------------------------------------


def test_cluster_samples_normalized(pool):
    assert len(pool.samples) == 200
    for s in pool.samples:
        assert s.gaps.points.max() == 0.0 and s.overshoot > 0
    assert pool.level == pytest.approx(0.7 * math.sqrt(8.0))


def test_cluster_law_errors():
    with pytest.raises(ValueError):
        sample_cluster_law(8.0, 0.0)
    with pytest.raises(RuntimeError, match="acceptance probability"):
        sample_cluster_law(8.0, 3.0, n_samples=1, method="rejection", budget=20, batch=20)


def test_rejection_and_spine_agree():
    a = sample_cluster_law(4.0, 0.5, n_samples=1500, seed=31, method="rejection", budget=3_000_000)
    b = sample_cluster_law(4.0, 0.5, n_samples=1500, seed=32)
    assert len(a.samples) == 1500
    assert stats.ks_2samp(a.overshoots, b.overshoots).pvalue > 0.001
    assert all(compare_processes(a.gap_processes, b.gap_processes, gap_panel()).overlaps)


def test_overshoot_exponential_and_independent():
    r = sample_cluster_law(16.0, 0.7, n_samples=2000, seed=7)
    o = r.overshoots
    assert stats.kstest(o, stats.expon(scale=1 / SQRT2).cdf).statistic < 0.05
    near = np.array([s.gaps.count_in(-1.0, 1e-12) for s in r.samples])
    assert abs(np.corrcoef(o, near)[0, 1]) < 0.05


# atom window ----------------------------------------------------------------


def test_reference_density(oracle):
    mass, _ = integrate.quad(reference_density, 0, np.inf)
    assert mass == pytest.approx(oracle["ref_density_mass"], abs=1e-10)
    zs = np.linspace(0, 5, 500_001)
    assert zs[np.argmax(reference_density(zs))] == pytest.approx(oracle["ref_density_mode"], abs=1e-5)
    outside = float(reference_cdf(0.3) + 1 - reference_cdf(3.5))
    assert outside == pytest.approx(oracle["ref_mass_outside_03_35"], abs=1e-6)


def test_atom_window_underpowered():
    S = sample_auxiliary_batch(16.0, np.ones(200), seed=2, mode="maxima", level=0.0)
    with pytest.warns(UserWarning, match="sampling window"):
        rep = atom_window_diagnostic(16.0, 50.0, S)
    assert rep.underpowered and rep.hist_mode is None
    assert "hist_mode" not in rep.to_dict()


def test_atom_window_mass_outside():
    S = sample_auxiliary_batch(16.0, np.ones(20_000), window=default_window(16.0, 0.01, 6.0), seed=8,
                               mode="maxima", level=0.0)
    rep = atom_window_diagnostic(16.0, 0.0, S)
    assert not rep.underpowered
    assert rep.mass_outside < 0.10


# limit assembly -------------------------------------------------------------


def test_assemble_errors_and_empty():
    g = np.random.default_rng(0)
    with pytest.raises(ValueError):
        assemble_limit_process(1.0, 0.5, [], g)
    with pytest.raises(ValueError):
        assemble_limit_process(1.0, 0.0, [PointConfiguration([0.0])], g)
    out = assemble_limit_process(1.0, 0.5, [PointConfiguration([0.0])], g, window=(1.0, 1.0))
    assert len(out) == 0


def test_singleton_pool_is_bare_ppp():
    single = [PointConfiguration([0.0], "D")]
    for seed in range(20):
        out = assemble_limit_process(1.3, 0.5, single, np.random.default_rng(seed))
        bare = limit_atoms(1.3, 0.5, (-3.0, 12.0), np.random.default_rng(seed))
        assert np.array_equal(out.points, bare)
    g = np.random.default_rng(99)
    counts = [assemble_limit_process(1.0, 0.5, single, g).count_in(0.0, 1.0) for _ in range(5000)]
    assert 0.9 <= poisson_dispersion(counts).index <= 1.1


def test_assembled_points_below_atoms(pool):
    out = assemble_limit_process(1.0, 0.5, pool.samples, np.random.default_rng(3))
    atoms = limit_atoms(1.0, 0.5, (-3.0, 12.0), np.random.default_rng(3))
    if atoms.size:
        assert out.points.max() == pytest.approx(atoms.max())


# persistence ----------------------------------------------------------------


def test_pool_round_trip(pool, tmp_path):
    write_cluster_pool(pool, tmp_path / "pool.csv")
    back = read_cluster_pool(tmp_path / "pool.csv")
    assert back.metadata() == pool.metadata()
    for a, b in zip(pool.samples, back.samples):
        assert np.array_equal(a.gaps.points, b.gaps.points) and a.overshoot == b.overshoot


def test_auxiliary_round_trip(tmp_path):
    S = sample_auxiliary_batch(3.0, [1.0, 2.0], window=(-3.0, -0.5), seed=3)
    write_auxiliary_csv(S, tmp_path / "aux.csv")
    back = read_auxiliary_points(tmp_path / "aux.csv")
    for s in S:
        if len(s.assembled):
            assert np.array_equal(back[s.sample_id], np.sort(s.assembled.points))


# invariants -----------------------------------------------------------------


@settings(max_examples=25)
@given(st.floats(-6.0, -0.1), st.floats(0.0, 3.0), st.integers(0, 2**32))
def test_atoms_stay_in_window(lo, width, seed):
    w = (lo, min(lo + width, 0.0))
    a = sample_atoms(w, np.random.default_rng(seed))
    assert np.all((a.positions >= w[0]) & (a.positions <= w[1]))


@settings(max_examples=15)
@given(st.floats(0.05, 20.0), st.integers(0, 2**20))
def test_log_z_shift(z, seed):
    a = sample_auxiliary(0.0, 1.0, window=(-2.0, -0.2), seed=seed)
    b = sample_auxiliary(0.0, z, window=(-2.0, -0.2), seed=seed)
    assert np.allclose(b.assembled.points - a.assembled.points, math.log(z) / SQRT2, atol=1e-12)
