import numpy as np
import pytest

from hamlab.dynamics import (
    chi_bar_max,
    chi_min,
    coupled_discrepancy,
    evolve,
    flux_from_dynamics,
    is_external_id,
    priority_dynamics,
    replay_positions,
    tagged_trajectory,
    west_process,
)
from hamlab.errors import InvalidParameterError, UncertifiedRegionError
from hamlab.lpp import flux_variational
from hamlab.points import PlanarPointSet, sample_planar_unit_poisson
from hamlab.profiles import (
    CLASS_SECOND,
    ORIGIN_ATOM_ID,
    add_origin_atom,
    from_positions,
    profile_count,
    shock_profile,
    stationary_profile,
    thinned_pair,
)
from hamlab.rng import RngStream
from hamlab.stats import ks_2samp, ks_statistic


def _ep(coords, window):
    coords = sorted(coords, key=lambda c: c[1])
    return PlanarPointSet(
        np.array([c[0] for c in coords], float),
        np.array([c[1] for c in coords], float),
        window,
    )


WIN = (-10.0, 10.0)
EMPTY = PlanarPointSet(np.array([]), np.array([]), (*WIN, 5.0))


def test_evolve_no_epochs():
    cfg = from_positions([1.0, 4.0], WIN)
    state, log = evolve(cfg, EMPTY)
    assert np.array_equal(state.config.positions, cfg.positions)
    assert log.n == 0


def test_evolve_single_forced_jump():
    cfg = from_positions([2.0], WIN)
    state, log = evolve(cfg, _ep([(1.0, 0.5)], (*WIN, 5.0)))
    assert state.config.positions.tolist() == [1.0]
    assert log.from_pos.tolist() == [2.0]
    assert log.to_pos.tolist() == [1.0]


def test_evolve_spawn_external():
    cfg = from_positions([-2.0], WIN)
    state, log = evolve(cfg, _ep([(3.0, 1.0)], (*WIN, 5.0)))
    assert state.config.positions.tolist() == [-2.0, 3.0]
    assert log.spawned.tolist() == [True]
    assert is_external_id(state.config.ids[-1])


def test_evolve_window_mismatch():
    cfg = from_positions([0.5], (-5.0, 5.0))
    with pytest.raises(InvalidParameterError):
        evolve(cfg, EMPTY)


def test_engines_agree_random():
    for i in range(60):
        s = RngStream(77).child("inst", i)
        cfg = stationary_profile(1.1, WIN, s.child("p"))
        epochs = sample_planar_unit_poisson((*WIN, 4.0), s.child("e"))
        sf, lf = evolve(cfg, epochs, engine="fast")
        sr, lr = evolve(cfg, epochs, engine="reference")
        assert np.array_equal(sf.config.positions, sr.config.positions)
        assert np.array_equal(lf.ranks, lr.ranks)
        assert np.array_equal(lf.from_pos, lr.from_pos)
        assert sf.contamination_frontier == sr.contamination_frontier


def test_no_crossing_and_order():
    s = RngStream(78)
    cfg = stationary_profile(1.0, WIN, s.child("p"))
    epochs = sample_planar_unit_poisson((*WIN, 5.0), s.child("e"))
    state, log = evolve(cfg, epochs)
    assert np.all(np.diff(state.config.positions) > 0)
    # replay at intermediate times stays sorted: ranks never cross
    for t in (1.0, 2.5, 4.0):
        assert np.all(np.diff(replay_positions(log, cfg, t)) > 0)


def test_stationarity_gap_law():
    # invariance: interior gaps of the evolved profile stay exponential
    gaps = []
    for seed in range(60):
        s = RngStream(1000).child("st", seed)
        cfg = stationary_profile(1.0, (0.0, 200.0), s.child("p"))
        epochs = sample_planar_unit_poisson((0.0, 200.0, 50.0), s.child("e"))
        state, _ = evolve(cfg, epochs)
        p = state.config.positions
        inner = p[(p >= 60.0) & (p <= 140.0)]
        gaps.append(np.diff(inner))
    d, pv = ks_statistic(np.concatenate(gaps), lambda x: 1.0 - np.exp(-np.asarray(x)))
    assert pv > 0.01


def test_tagged_trajectory_constant_and_monotone():
    cfg = add_origin_atom(stationary_profile(1.0, WIN, RngStream(5).child("p")))
    rec = tagged_trajectory(cfg, EMPTY, ORIGIN_ATOM_ID)
    assert rec.n_jumps == 0 and rec.final_position == 0.0
    epochs = sample_planar_unit_poisson((*WIN, 5.0), RngStream(5).child("e"))
    rec = tagged_trajectory(cfg, epochs, ORIGIN_ATOM_ID)
    path = np.concatenate([[0.0], rec.jump_positions])
    assert np.all(np.diff(path) <= 0)


def test_coupled_discrepancy_trivial_and_monotone():
    base = shock_profile(0.8, 1.6, WIN, RngStream(6).child("p"))
    rec, _ = coupled_discrepancy(base, EMPTY)
    assert rec.n_jumps == 0
    epochs = sample_planar_unit_poisson((*WIN, 4.0), RngStream(6).child("e"))
    rec, samples = coupled_discrepancy(base, epochs, sample_times=[2.0, 4.0])
    path = np.concatenate([[0.0], rec.jump_positions])
    assert np.all(np.diff(path) >= 0)
    assert samples[1] >= samples[0] >= 0.0


def test_priority_zipper_rules():
    # epoch right of the discrepancy: pulls the first-class particle without a cross
    first = from_positions([1.0], WIN)
    second = from_positions([0.0], WIN, CLASS_SECOND, id_start=1)
    res = priority_dynamics(first, second, _ep([(0.5, 1.0)], (*WIN, 5.0)), engine="reference")
    assert res.entity_final.tolist() == [0.0]
    # epoch left of the discrepancy: the jump crosses it, so it takes the vacated spot
    res = priority_dynamics(first, second, _ep([(-0.5, 1.0)], (*WIN, 5.0)), engine="reference")
    assert res.entity_final.tolist() == [1.0]
    state = res.state
    assert state.config.positions.tolist() == [-0.5, 1.0]
    assert state.config.classes.tolist() == [1, 2]


def test_priority_without_seconds_matches_evolve():
    s = RngStream(9)
    first = stationary_profile(1.0, WIN, s.child("p"))
    second = from_positions([], WIN, CLASS_SECOND, id_start=first.n)
    epochs = sample_planar_unit_poisson((*WIN, 4.0), s.child("e"))
    res = priority_dynamics(first, second, epochs)
    state, _ = evolve(first, epochs)
    assert np.array_equal(res.state.config.positions, state.config.positions)


def test_priority_engines_agree():
    for i in range(40):
        s = RngStream(90).child("inst", i)
        first, second, _ = thinned_pair(0.6, 1.4, WIN, s.child("p"))
        epochs = sample_planar_unit_poisson((*WIN, 3.0), s.child("e"))
        fast = priority_dynamics(first, second, epochs, tracked=list(range(second.n)))
        ref = priority_dynamics(first, second, epochs, engine="reference")
        assert np.array_equal(fast.state.config.positions, ref.state.config.positions)
        assert np.array_equal(fast.state.config.classes, ref.state.config.classes)
        assert np.array_equal(fast.entity_final, ref.entity_final)
        for eid, rec in fast.trajectories.items():
            other = ref.trajectories[eid]
            assert np.array_equal(rec.jump_times, other.jump_times)
            assert np.array_equal(rec.jump_positions, other.jump_positions)


def test_flux_from_dynamics_no_epochs():
    cfg = stationary_profile(1.0, WIN, RngStream(10))
    state, log = evolve(cfg, EMPTY)
    for x in (0.5, 3.0, 9.0):
        assert flux_from_dynamics(log, cfg, x, 5.0) == profile_count(cfg, x)


def test_flux_from_dynamics_matches_variational():
    for i in range(50):
        s = RngStream(11).child("inst", i)
        cfg = stationary_profile(1.0, WIN, s.child("p"))
        epochs = sample_planar_unit_poisson((*WIN, 3.0), s.child("e"))
        state, log = evolve(cfg, epochs)
        gen = s.child("q").generator()
        x = float(gen.uniform(-5, 9))
        assert flux_from_dynamics(log, cfg, x, 3.0) == flux_variational(cfg, epochs, x, 3.0).value


def test_second_class_flux_mass_conservation():
    for i in range(30):
        s = RngStream(12).child("inst", i)
        first, second, full = thinned_pair(0.7, 1.5, WIN, s.child("p"))
        epochs = sample_planar_unit_poisson((*WIN, 3.0), s.child("e"))
        res = priority_dynamics(first, second, epochs, engine="reference")
        if not np.all(res.entity_alive):
            continue
        gen = s.child("q").generator()
        x = float(gen.uniform(-6, 6))
        lbar = res.flux(x, classes=CLASS_SECOND)
        l_all = res.flux(x, classes=None)
        l_first = res.flux(x, classes=1)
        assert lbar == l_all - l_first


def test_west_process_and_independence():
    times = west_process(from_positions([1.0], WIN), EMPTY, -2.0)
    assert times.size == 0
    # crossing count at a negative abscissa is independent of the initial
    # count between that abscissa and the origin
    n = 10_000
    counts = np.empty(n)
    nu0 = np.empty(n)
    for i in range(n):
        s = RngStream(13).child("w", i)
        cfg = stationary_profile(1.0, (-50.0, 30.0), s.child("p"))
        epochs = sample_planar_unit_poisson((-50.0, 30.0, 10.0), s.child("e"))
        times = west_process(cfg, epochs, -10.0)
        counts[i] = times.size
        nu0[i] = -profile_count(cfg, -10.0)
    corr = np.corrcoef(counts, nu0)[0, 1]
    assert abs(corr) <= 3.0 / np.sqrt(n)
    # inter-jump law: rate 1/lam
    gaps = []
    for i in range(200):
        s = RngStream(14).child("w", i)
        cfg = stationary_profile(1.0, (-80.0, 60.0), s.child("p"))
        epochs = sample_planar_unit_poisson((-80.0, 60.0, 50.0), s.child("e"))
        gaps.append(np.diff(west_process(cfg, epochs, -20.0)))
    d, p = ks_statistic(np.concatenate(gaps), lambda x: 1.0 - np.exp(-np.asarray(x)))
    assert p > 0.01


def test_chi_min_trivial_and_identity():
    cfg = from_positions([1.0, 2.0], WIN)
    state, log = evolve(cfg, EMPTY)
    assert chi_min(state, 1.5) == 2.0
    with pytest.raises(UncertifiedRegionError):
        chi_min(state, 5.0)
    for i in range(60):
        s = RngStream(15).child("chi", i)
        cfg = stationary_profile(1.2, WIN, s.child("p"))
        epochs = sample_planar_unit_poisson((*WIN, 3.0), s.child("e"))
        state, log = evolve(cfg, epochs)
        x = float(s.child("q").generator().uniform(-4, 4))
        try:
            chi = chi_min(state, x)
        except UncertifiedRegionError:
            continue
        assert profile_count(cfg, chi) == flux_from_dynamics(log, cfg, x, state.time) + 1


def test_chi_bar_identity():
    for i in range(60):
        s = RngStream(16).child("chibar", i)
        first, second, _ = thinned_pair(0.7, 1.5, WIN, s.child("p"))
        if second.n == 0:
            continue
        epochs = sample_planar_unit_poisson((*WIN, 3.0), s.child("e"))
        res = priority_dynamics(first, second, epochs, engine="reference")
        if not np.all(res.entity_alive):
            continue
        x = float(s.child("q").generator().uniform(-4, 4))
        try:
            chib = chi_bar_max(res, x)
        except UncertifiedRegionError:
            continue
        assert res.flux(x, classes=CLASS_SECOND) == profile_count(second, chib)


def test_chi_distributional_identity():
    # law of the minimal label right of x matches the law of x - X(t)
    n = 4000
    x, t = 2.0, 6.0
    chi_samples = np.empty(n)
    ref_samples = np.empty(n)
    for i in range(n):
        s = RngStream(17).child("a", i)
        cfg = stationary_profile(1.0, (-50.0, 40.0), s.child("p"))
        epochs = sample_planar_unit_poisson((-50.0, 40.0, t), s.child("e"))
        state, _ = evolve(cfg, epochs)
        chi_samples[i] = chi_min(state, x)
        s = RngStream(18).child("b", i)
        cfg = stationary_profile(1.0, (-50.0, 40.0), s.child("p"))
        rank = int(np.searchsorted(cfg.positions, 0.0, side="right")) - 1
        epochs = sample_planar_unit_poisson((-50.0, 40.0, t), s.child("e"))
        from hamlab.dynamics import tagged_positions

        ref_samples[i] = x - tagged_positions(cfg, epochs, rank, [t])[0]
    d, p = ks_2samp(chi_samples, ref_samples)
    assert p > 0.01


def test_attractivity():
    for i in range(40):
        s = RngStream(19).child("att", i)
        first, second, full = thinned_pair(0.7, 1.4, WIN, s.child("p"))
        epochs = sample_planar_unit_poisson((*WIN, 4.0), s.child("e"))
        lo, _ = evolve(first, epochs)
        hi, _ = evolve(full, epochs)
        gen = s.child("q").generator()
        for _ in range(5):
            u, v = sorted(gen.uniform(-10, 10, size=2))
            nlo = np.sum((lo.config.positions > u) & (lo.config.positions <= v))
            nhi = np.sum((hi.config.positions > u) & (hi.config.positions <= v))
            assert nlo <= nhi


def test_event_log_csv(tmp_path):
    cfg = stationary_profile(1.0, WIN, RngStream(20).child("p"))
    epochs = sample_planar_unit_poisson((*WIN, 2.0), RngStream(20).child("e"))
    state, log = evolve(cfg, epochs)
    path = tmp_path / "log.csv"
    log.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "time,epoch_x,id,from,to"
    assert len(lines) == log.n + 1


def test_trajectory_csv(tmp_path):
    cfg = add_origin_atom(stationary_profile(1.0, WIN, RngStream(21).child("p")))
    epochs = sample_planar_unit_poisson((*WIN, 4.0), RngStream(21).child("e"))
    rec = tagged_trajectory(cfg, epochs, ORIGIN_ATOM_ID)
    path = tmp_path / "traj.csv"
    rec.to_csv(path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "time,position" and len(lines) == rec.n_jumps + 2
