import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import gaussian_model
from oracles import thinning_chisquare, thinning_law, thinning_setup
from wrjump.kernels import GridSpec, KernelSpec, cutoff_radius, kernel_eval
from wrjump.model import ModelParams
from wrjump.particles import (CellIndex, ParticleConfig, Simulator, brute_force_energy, cell_counts,
                              empirical_density, event_step, init_poisson, make_rng, replica_seed,
                              simulate, simulate_ensemble, snapshots_to_csv, subpoisson_check)

FREE = gaussian_model(phi_mass=0.0)
MODEL_2D = gaussian_model(d=2)


def test_config_validation():
    with pytest.raises(ValueError):
        ParticleConfig(5.0, 1, [[5.0]], [])
    cfg = ParticleConfig(5.0, 2, [[1.0, 2.0]], np.empty((0, 2)))
    assert cfg.counts == (1, 0) and cfg.points(0).shape == (1, 2)


def test_init_poisson_moments():
    counts = np.array([init_poisson(10.0, 1, 5.0, 0.0, make_rng(replica_seed(3, r))).counts
                       for r in range(1000)])
    assert np.all(counts[:, 1] == 0)
    n = counts[:, 0]
    assert abs(n.mean() - 50) < 3 * math.sqrt(50 / 1000)
    assert abs(n.var(ddof=1) / n.mean() - 1) < 0.1


def test_init_poisson_rejects_negative():
    with pytest.raises(ValueError):
        init_poisson(1.0, 1, -1.0, 1.0, make_rng(0))


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]), st.sampled_from(["tophat", "gaussian", "exponential"]))
@settings(max_examples=25, deadline=None)
def test_cell_index_sums_equal_brute_force(seed, d, family):
    rng = np.random.default_rng(seed)
    L = 12.0
    pts = rng.random((int(rng.integers(0, 300)), d)) * L
    spec = KernelSpec(family, 1.3, 0.4)
    idx = CellIndex(pts, L, d, cutoff_radius(spec))
    for y in rng.random((40, d)) * L:
        assert idx.energy(y, spec) == brute_force_energy(y, pts, L, spec)


def test_cell_index_exact_with_kernel_cutoff():
    rng = np.random.default_rng(1)
    L = 20.0
    spec = KernelSpec("gaussian", 1.0, 0.7)
    for d in (1, 2):
        pts = rng.random((500, d)) * L
        idx = CellIndex(pts, L, d, cutoff_radius(spec))
        mism = sum(idx.energy(y, spec) != brute_force_energy(y, pts, L, spec)
                   for y in rng.random((500, d)) * L)
        assert mism == 0


def test_cell_index_candidates_superset_after_moves():
    rng = np.random.default_rng(4)
    L, d, cut = 10.0, 2, 1.0
    pts = rng.random((200, d)) * L
    idx = CellIndex(pts, L, d, cut)
    for p in rng.integers(0, 200, 100):
        idx.move(int(p), rng.random(d) * L)
    for y in rng.random((100, d)) * L:
        diff = np.abs(idx.points - y)
        dist = np.linalg.norm(np.minimum(diff, L - diff), axis=1)
        near = set(np.nonzero(dist <= cut)[0])
        assert near <= set(idx.candidates(y).tolist())


def test_free_jumps_always_accept():
    rng = make_rng(2)
    cfg = init_poisson(10.0, 1, 1.0, 1.0, rng)
    for _ in range(50):
        cfg, rec = event_step(cfg, FREE, rng)
        assert rec.accepted and rec.acceptance_probability == 1.0


def test_single_neighbour_acceptance():
    model, cfg = thinning_setup()
    rng = make_rng(0)
    for _ in range(200):
        _, rec = event_step(cfg, model, rng)
        z = cfg.points(1 - rec.species)[0, 0]
        r = abs(rec.proposal[0] - z)
        r = min(r, cfg.box_length - r)
        expected = math.exp(-kernel_eval(model.potential(rec.species), r))
        assert rec.acceptance_probability == pytest.approx(expected, rel=1e-14, abs=1e-300)


def test_event_step_empty_raises():
    with pytest.raises(ValueError):
        event_step(ParticleConfig(1.0, 1, [], []), FREE, make_rng(0))


def test_thinning_law_small_sample():
    p_dest, p_acc, n_acc, tried = thinning_chisquare(20_000, seed=5)
    assert p_dest > 1e-3 and p_acc > 1e-3
    assert 0 < n_acc < tried


def test_type_selection_and_waiting_times():
    a0 = KernelSpec.with_mass("gaussian", 1.0, 1.0, 1)
    a1 = KernelSpec.with_mass("gaussian", 3.0, 1.0, 1)
    model = ModelParams(1, a0, a1, KernelSpec.zero(), KernelSpec.zero())
    cfg = ParticleConfig(10.0, 1, [[1.0], [2.0]], [[5.0]])
    rng = make_rng(8)
    recs = [event_step(cfg, model, rng)[1] for _ in range(5000)]
    frac0 = np.mean([r.species == 0 for r in recs])
    assert abs(frac0 - 0.4) < 4 * math.sqrt(0.24 / 5000)
    waits = np.array([r.waiting_time for r in recs])
    assert stats.kstest(waits, "expon", args=(0, 1 / 5.0)).pvalue > 1e-3


def test_simulate_conserves_counts_and_is_reproducible(model):
    cfg0 = init_poisson(15.0, 1, 1.0, 2.0, make_rng(1))
    a = simulate(cfg0, model, 1.0, 0.25, 42)
    b = simulate(cfg0, model, 1.0, 0.25, 42)
    assert np.allclose(a.times, [0, 0.25, 0.5, 0.75, 1.0])
    assert len(a.snapshots) == 5
    for s, t in zip(a.snapshots, b.snapshots):
        assert s.counts == cfg0.counts
        assert np.array_equal(s.points0, t.points0) and np.array_equal(s.points1, t.points1)
    assert np.array_equal(a.stats.events_attempted, b.stats.events_attempted)
    assert np.all(a.stats.events_accepted <= a.stats.events_attempted)
    assert np.array_equal(a.snapshots[0].points0, cfg0.points0)


def test_simulate_block_independent(model, monkeypatch):
    """The event stream does not depend on how uniforms are blocked."""
    import wrjump.particles as P
    cfg0 = init_poisson(15.0, 1, 2.0, 2.0, make_rng(1))
    ref = simulate(cfg0, model, 2.0, 1.0, 9)
    monkeypatch.setattr(P, "BLOCK_ROWS", 37)
    other = simulate(cfg0, model, 2.0, 1.0, 9)
    assert np.array_equal(ref.snapshots[-1].points0, other.snapshots[-1].points0)
    assert np.array_equal(ref.stats.events_attempted, other.stats.events_attempted)


def test_simulate_zero_time():
    cfg0 = init_poisson(5.0, 2, 1.0, 1.0, make_rng(3))
    res = simulate(cfg0, MODEL_2D, 0.0, 0.1, 1)
    assert len(res.snapshots) == 1 and np.array_equal(res.snapshots[0].points1, cfg0.points1)


def test_simulate_ensemble_threads_match_serial(model):
    init = lambda rng: init_poisson(10.0, 1, 1.0, 1.0, rng)
    a = simulate_ensemble(init, model, 0.5, 0.5, 3, 4, workers=1)
    b = simulate_ensemble(init, model, 0.5, 0.5, 3, 4, workers=4)
    for x, y in zip(a, b):
        assert np.array_equal(x.snapshots[-1].points0, y.snapshots[-1].points0)
    assert not np.array_equal(a[0].snapshots[-1].points0, a[1].snapshots[-1].points0)


def test_free_dynamics_preserve_poisson():
    L, lam = 10.0, 3.0
    init = lambda rng: init_poisson(L, 1, lam, lam, rng)
    res = simulate_ensemble(init, FREE, 2.0, 2.0, 11, 300, workers=4)
    final = [r.snapshots[-1] for r in res]
    pos = np.concatenate([s.points0[:, 0] for s in final])
    assert stats.kstest(pos / L, "uniform").pvalue > 1e-3
    n = np.array([s.counts[0] for s in final])
    g = GridSpec(1, L, 5)
    cells = np.stack([cell_counts(s, g)[0] for s in final])
    fano = cells.var(axis=0, ddof=1) / cells.mean(axis=0)
    assert np.all(np.abs(fano - 1) < 0.25)
    assert abs(n.mean() - lam * L) < 4 * math.sqrt(lam * L / len(n))


def test_empirical_density_bookkeeping():
    g = GridSpec(1, 4.0, 4)
    cfg = ParticleConfig(4.0, 1, [[1.5]], [[0.2], [3.9]])
    rho = empirical_density([cfg], g)
    assert np.array_equal(rho.rho0, [0, 1, 0, 0])
    assert np.array_equal(rho.rho1, [1, 0, 0, 1])
    g2 = GridSpec(2, 4.0, 8)
    cfgs = [init_poisson(4.0, 2, 2.0, 1.0, make_rng(r)) for r in range(10)]
    rho2 = empirical_density(cfgs, g2)
    mean0 = np.mean([c.counts[0] for c in cfgs])
    assert rho2.rho0.sum() * g2.cell_volume == pytest.approx(mean0)
    with pytest.raises(ValueError):
        empirical_density(cfgs, GridSpec(2, 5.0, 8))


def test_subpoisson_passes_at_time_zero_and_fails_for_double_intensity(model):
    g = GridSpec(1, 10.0, 5)
    cfgs = [init_poisson(10.0, 1, 1.0, 1.0, make_rng(replica_seed(1, r))) for r in range(200)]
    rep = subpoisson_check(cfgs, model, 1.0, 0.0, g)
    assert rep.passed and rep.order1_margin > 0
    hot = [init_poisson(10.0, 1, 2.0, 2.0, make_rng(replica_seed(2, r))) for r in range(200)]
    bad = subpoisson_check(hot, model, 1.0, 0.0, g)
    assert not bad.passed and any(f["order"] == 1 for f in bad.failures)


def test_snapshot_csv_layout():
    cfg0 = ParticleConfig(5.0, 2, [[1.0, 2.0]], [[3.0, 4.0]])
    res = simulate(cfg0, MODEL_2D, 0.0, 1.0, 0)
    lines = snapshots_to_csv([res]).splitlines()
    assert lines[0] == "replica,time,type,x,y"
    assert lines[1:] == ["0,0.0,0,1.0,2.0", "0,0.0,1,3.0,4.0"]


def test_2d_run():
    a = KernelSpec.with_mass("exponential", 1.0, 0.5, 2)
    phi = KernelSpec.with_mass("tophat", 1.0, 0.6, 2)
    m2 = ModelParams(2, a, a, phi, phi)
    cfg0 = init_poisson(6.0, 2, 1.0, 1.0, make_rng(0))
    res = simulate(cfg0, m2, 1.0, 0.5, 1)
    last = res.snapshots[-1]
    assert last.counts == cfg0.counts
    assert last.points0.min() >= 0 and last.points0.max() < 6.0
