import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bbm_extremal.branching_engine import (BranchingLaw, EmptyPopulationError, GenealogyUnavailableError,
                                           InvalidLawError, SimConfig, centering_m, entropic_envelope,
                                           envelope_crossing_fraction, extremal_points, genealogical_distance,
                                           max_displacement, simulate, simulate_batch, simulate_final,
                                           single_particle_snapshot)
from bbm_extremal.branching_engine.diagnostics import (read_snapshots_binary, read_snapshots_csv,
                                                       write_snapshots_binary, write_snapshots_csv)

LAW = BranchingLaw.binary()


# laws and configs -----------------------------------------------------------


def test_law_normalization():
    law = BranchingLaw({1: 0.25, 2: 0.5, 3: 0.25})
    assert law.K == pytest.approx(2 * 0.5 + 6 * 0.25)
    with pytest.raises(InvalidLawError):
        BranchingLaw({2: 0.5, 3: 0.4})
    with pytest.raises(InvalidLawError):
        BranchingLaw({1: 0.5, 2: 0.5})
    with pytest.raises(InvalidLawError):
        BranchingLaw({1: 1.0})


def test_config_guards():
    with pytest.raises(ValueError):
        SimConfig(horizon=5.0, prune_gap=2.0)
    with pytest.raises(ValueError):
        SimConfig(horizon=5.0, checkpoint_times=(6.0,))


# simulate -------------------------------------------------------------------


def test_horizon_zero_is_root():
    snaps = simulate(SimConfig(horizon=0.0), LAW)
    assert len(snaps) == 1
    assert snaps[0].n == 1 and snaps[0].positions[0] == 0.0


def test_mean_population_is_exponential(oracle):
    n = np.array(simulate_final(SimConfig(horizon=2.0, seed=11), LAW, 100_000, reduce=lambda s: s.n))
    se = n.std(ddof=1) / math.sqrt(n.size)
    assert abs(n.mean() - oracle["mean_population_t2"]) < 3 * se


@pytest.mark.parametrize("t", [1.0, 4.0])
def test_count_martingale(t):
    n = np.array(simulate_final(SimConfig(horizon=t, seed=12), LAW, 20_000, reduce=lambda s: s.n))
    w = n * math.exp(-t)
    assert abs(w.mean() - 1) < 3 * w.std(ddof=1) / math.sqrt(w.size)


def test_degenerate_law_is_brownian():
    res = simulate_final(SimConfig(horizon=4.0, seed=13), BranchingLaw.degenerate(), 10_000,
                         reduce=lambda s: (s.n, s.positions[0]))
    n, x = np.array(res).T
    assert np.all(n == 1)
    se_var = 4.0 * math.sqrt(2.0 / (x.size - 1))
    assert abs(x.var(ddof=1) - 4.0) < 3 * se_var
    assert stats.kstest(x, stats.norm(scale=2.0).cdf).statistic < 0.02


def test_branch_counts_follow_law():
    law = BranchingLaw({1: 0.3, 2: 0.4, 3: 0.3})
    snaps = simulate_final(SimConfig(horizon=3.0, seed=14), law, 2000)
    tot = {}
    for s in snaps:
        for k, c in s.split_counts.items():
            tot[k] = tot.get(k, 0) + c
    N = sum(tot.values())
    for k, p in law.offspring_probs.items():
        se = math.sqrt(p * (1 - p) / N)
        assert abs(tot.get(k, 0) / N - p) < 3 * se


def test_reproducible_and_chunk_independent():
    cfg = SimConfig(horizon=4.0, seed=99, checkpoint_times=(2.0,))
    a = simulate_batch(cfg, LAW, 12)
    b = simulate_batch(cfg, LAW, 12, chunk=5)
    c = simulate_batch(cfg, LAW, 7, first_replica=5)
    for ra, rb in zip(a, b):
        for sa, sb in zip(ra, rb):
            assert np.array_equal(sa.positions, sb.positions) and np.array_equal(sa.ids, sb.ids)
    for ra, rc in zip(a[5:], c):
        assert np.array_equal(ra[-1].positions, rc[-1].positions)


def test_pruning_soundness():
    # same replica streams with and without the barrier
    free = simulate_final(SimConfig(horizon=8.0, seed=15), LAW, 2000, reduce=lambda s: s.positions.max())
    cut = simulate_final(SimConfig(horizon=8.0, seed=15, prune_gap=8.0), LAW, 2000,
                         reduce=lambda s: s.positions.max())
    assert stats.ks_2samp(free, cut).statistic < 0.01


def test_population_cap_aborts():
    s = simulate(SimConfig(horizon=6.0, population_cap=50, seed=3), LAW)[-1]
    assert s.aborted


def test_genealogy_chains_reach_root():
    s = simulate(SimConfig(horizon=3.0, seed=5, record_genealogy=True), LAW)[-1]
    for pid in s.ids[:20]:
        chain = s.genealogy.ancestry(int(pid))
        assert chain[-1] == 0
        births = [s.genealogy.birth(p) for p in chain]
        assert births == sorted(births, reverse=True)


# diagnostics ----------------------------------------------------------------


def test_max_displacement_examples():
    assert max_displacement(single_particle_snapshot()) == 0.0
    s = single_particle_snapshot()
    s = type(s)(1.0, np.array([-1.0, 2.5, 0.3]), np.arange(3), np.full(3, -1), np.zeros(3), np.zeros(3, np.int16))
    assert max_displacement(s) == 2.5
    empty = type(s)(1.0, np.zeros(0), np.zeros(0, int), np.zeros(0, int), np.zeros(0), np.zeros(0, np.int16))
    with pytest.raises(EmptyPopulationError):
        max_displacement(empty)


def test_max_of_brownian_particle():
    x = simulate_final(SimConfig(horizon=3.0, seed=16), BranchingLaw.degenerate(), 10_000,
                       reduce=max_displacement)
    assert stats.kstest(x, stats.norm(scale=math.sqrt(3.0)).cdf).statistic < 0.02


def test_centering_values(oracle):
    assert centering_m(1.0) == pytest.approx(oracle["m_1"], abs=1e-12)
    assert centering_m(10.0) == pytest.approx(oracle["m_10"], abs=1e-12)
    assert centering_m(math.e) == pytest.approx(oracle["m_e"], abs=1e-12)


def test_extremal_points():
    s = single_particle_snapshot()
    s = type(s)(1.0, np.array([3.0, 5.0]), np.arange(2), np.full(2, -1), np.zeros(2), np.zeros(2, np.int16))
    assert extremal_points(s, 5.0).points.tolist() == [-2.0, 0.0]
    assert extremal_points(s, max_displacement(s)).max() == 0.0


def test_genealogical_distance():
    s = simulate(SimConfig(horizon=3.0, seed=21, record_genealogy=True), LAW)[-1]
    i = int(s.ids[0])
    assert genealogical_distance(i, i, s) == 3.0
    # siblings from the root's first split meet at that split time
    g = s.genealogy
    first = [int(p) for p in g.ids if g.parent(int(p)) == 0]
    assert len(first) == 2
    t_split = g.birth(first[0])
    side = {}
    for pid in s.ids:
        chain = g.ancestry(int(pid))
        root_child = chain[-2] if len(chain) > 1 else None
        side.setdefault(root_child, int(pid))
    a, b = side[first[0]], side[first[1]]
    assert genealogical_distance(a, b, s) == t_split
    q = [genealogical_distance(int(x), int(y), s) for x in s.ids[:8] for y in s.ids[:8]]
    assert all(0 <= v <= 3.0 for v in q)


def test_genealogical_distance_errors():
    s = simulate(SimConfig(horizon=2.0, seed=1), LAW)[-1]
    with pytest.raises(GenealogyUnavailableError):
        genealogical_distance(int(s.ids[0]), int(s.ids[-1]), s)
    one = simulate(SimConfig(horizon=2.0, seed=1, record_genealogy=True), BranchingLaw.degenerate())[-1]
    with pytest.raises(KeyError):
        genealogical_distance(int(one.ids[0]), int(one.ids[0]) + 1, one)


def test_entropic_envelope(oracle):
    assert entropic_envelope(0.0, 16.0, 1 / 3) == 0.0
    assert entropic_envelope(16.0, 16.0, 1 / 3) == pytest.approx(centering_m(16.0), abs=1e-12)
    assert entropic_envelope(8.0, 16.0, 1 / 3) == pytest.approx(oracle["envelope_8_16_third"], abs=1e-12)
    with pytest.raises(ValueError):
        entropic_envelope(1.0, 16.0, 0.5)


def test_envelope_crossing_edge_cases():
    cps = tuple(np.linspace(0, 8, 17).tolist())
    snaps = [r[-1] for r in simulate_batch(SimConfig(horizon=8.0, seed=4, checkpoint_times=cps,
                                                     record_paths=True), LAW, 20)]
    empty = envelope_crossing_fraction(snaps, 0.45, (4.0, 4.0))
    assert empty.crossing == 0
    inf = envelope_crossing_fraction(snaps, 0.45, (1.0, 7.0), envelope=lambda s, t: np.inf)
    assert inf.crossing == 0
    rep = envelope_crossing_fraction(snaps, 0.45, (1.0, 7.0))
    assert rep.fraction is None or 0 <= rep.fraction <= 1


def test_envelope_trend():
    T = 12.0
    cps = tuple(np.linspace(0, T, 49).tolist())
    snaps = [r[-1] for r in simulate_batch(SimConfig(horizon=T, seed=8, checkpoint_times=cps, prune_gap=8.0,
                                                     record_paths=True), LAW, 40)]
    fr = [envelope_crossing_fraction(snaps, 0.45, (r, T - r)).fraction for r in (1.0, 2.0, 3.0)]
    assert all(f is not None for f in fr)
    assert fr[0] >= fr[1] >= fr[2]


# persistence ----------------------------------------------------------------


def test_snapshot_round_trips(tmp_path):
    snaps = [s for r in simulate_batch(SimConfig(horizon=3.0, seed=2, checkpoint_times=(1.0,)), LAW, 3)
             for s in r]
    write_snapshots_csv(snaps, tmp_path / "s.csv")
    write_snapshots_binary(snaps, tmp_path / "s.bin")
    for back in (read_snapshots_csv(tmp_path / "s.csv"), read_snapshots_binary(tmp_path / "s.bin")):
        assert len(back) == len(snaps)
        for a, b in zip(snaps, back):
            assert a.time == b.time and a.replica == b.replica
            assert np.array_equal(a.positions, b.positions)
            assert np.array_equal(a.ids, b.ids) and np.array_equal(a.parent_ids, b.parent_ids)


# invariants -----------------------------------------------------------------


@given(st.integers(0, 2**63), st.floats(0.1, 3.0))
def test_same_seed_same_snapshot(seed, t):
    cfg = SimConfig(horizon=t, seed=seed)
    a, b = simulate(cfg, LAW)[-1], simulate(cfg, LAW)[-1]
    assert np.array_equal(a.positions, b.positions)


@given(st.integers(0, 2**32), st.floats(0.5, 3.0))
def test_children_born_after_parents(seed, t):
    s = simulate(SimConfig(horizon=t, seed=seed, record_genealogy=True), LAW)[-1]
    g = s.genealogy
    for pid in g.ids:
        par = g.parent(int(pid))
        if par is not None:
            assert g.birth(int(pid)) >= g.birth(par)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=30), st.floats(-10, 10))
def test_extremal_points_translate(xs, c):
    n = len(xs)
    s = single_particle_snapshot()
    s = type(s)(1.0, np.array(xs), np.arange(n), np.full(n, -1), np.zeros(n), np.zeros(n, np.int16))
    assert extremal_points(s, c).max() == pytest.approx(max(xs) - c)
