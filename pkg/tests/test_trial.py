"""Trial protocol, scoring and the rank-weighted fitness reduction."""

import numpy as np
import pytest

from duetsim import trial as trial_mod
from duetsim.ctrnn import CtrnnParams
from duetsim.engine import params_batch
from duetsim.evolution import decode
from duetsim.trial import (TrialConfig, TrialRecord, evaluate_batch,
                           evaluate_solution, poses_for_seed,
                           rank_weighted_fitness, run_trial,
                           sample_initial_conditions, trial_score)


def forward_driver(theta=3.0, gain=2.0):
    """Controller whose motors push both wheels forward at a constant rate."""
    return CtrnnParams(np.zeros((3, 3)), np.array([theta, theta, 0.0]),
                       np.ones(3), np.zeros((2, 2)),
                       np.array([gain, gain]))


def test_sampling_ranges():
    rng = np.random.default_rng(0)
    for _ in range(200):
        (x1, y1, h1), (x2, y2, h2) = sample_initial_conditions(rng)
        assert -20.0 <= x1 <= -5.0
        assert 5.0 <= x2 <= 20.0
        assert -20.0 <= y1 <= 20.0 and -20.0 <= y2 <= 20.0
        assert 0.0 <= h1 < 2.0 * np.pi and 0.0 <= h2 < 2.0 * np.pi
        assert x1 < 0.0 < x2
        assert np.hypot(x2 - x1, y2 - y1) >= 10.0


def test_sampling_deterministic():
    a = sample_initial_conditions(np.random.default_rng(42))
    b = sample_initial_conditions(np.random.default_rng(42))
    assert a == b
    assert poses_for_seed(42) == a


def test_run_trial_validation():
    p = forward_driver()
    with pytest.raises(ValueError):
        run_trial(p, TrialConfig(init_poses=None))
    with pytest.raises(ValueError):
        run_trial(p, TrialConfig(init_poses=poses_for_seed(0), record_stride=0))


def test_zero_gain_agents_stand_still():
    p = decode(np.zeros(21))
    rec = run_trial(p, TrialConfig(init_poses=poses_for_seed(1), duration=20.0))
    np.testing.assert_array_equal(rec.motors, np.zeros_like(rec.motors))
    np.testing.assert_allclose(rec.distances, rec.d_init, rtol=1e-12)
    assert rec.raw_score == 0.0
    assert rec.collision_times == []


def test_trial_rerun_is_bitwise_identical():
    p = forward_driver()
    cfg = TrialConfig(init_poses=poses_for_seed(3), duration=30.0)
    a = run_trial(p, cfg)
    b = run_trial(p, cfg)
    for field in ("states", "rates", "intensities", "motors",
                  "positions", "headings", "distances"):
        assert getattr(a, field).tobytes() == getattr(b, field).tobytes()
    assert a.raw_score == b.raw_score


def test_disabled_collisions_pass_through():
    # Two agents driven straight at each other overlap freely when
    # collision handling is off, and no events are logged.
    p = forward_driver()
    poses = ((-6.0, 0.0, 0.0), (6.0, 0.0, np.pi))
    on = run_trial(p, TrialConfig(init_poses=poses, duration=10.0))
    off = run_trial(p, TrialConfig(init_poses=poses, duration=10.0,
                                   collisions_enabled=False))
    assert len(on.collision_times) > 0
    assert off.collision_times == []
    assert off.distances.min() < 2.0 * 4.0


def synthetic_record(distances, d_init):
    distances = np.asarray(distances, dtype=float)
    t = np.arange(len(distances), dtype=float)
    empty = np.zeros((len(distances), 2, 2))
    return TrialRecord(
        config=TrialConfig(), times=t,
        states=np.zeros((len(distances), 2, 3)),
        rates=np.zeros((len(distances), 2, 3)),
        intensities=empty, motors=empty, positions=empty,
        headings=np.zeros((len(distances), 2)), distances=distances,
        d_init=d_init, raw_score=np.nan, clamped_score=np.nan,
        collision_times=[], degenerate_times=[])


def test_score_stationary_is_zero():
    rec = synthetic_record(np.full(101, 12.0), 12.0)
    assert trial_score(rec) == 0.0


def test_score_constant_contact_is_one():
    d = np.full(101, 0.0)
    d[0] = 12.0
    rec = synthetic_record(d, 12.0)
    assert trial_score(rec) == 1.0


def test_score_linear_approach_is_half():
    steps = 1000
    d = 12.0 * (1.0 - np.arange(steps + 1) / steps)
    rec = synthetic_record(d, 12.0)
    assert abs(trial_score(rec) - 0.5) < 1e-3


def test_fitness_of_equal_scores():
    assert abs(rank_weighted_fitness([0.37] * 10) - 0.37) < 1e-15


def test_fitness_single_failure_weighs_heavily():
    scores = [1.0] * 10
    scores[4] = 0.0
    f = rank_weighted_fitness(scores)
    h10 = np.sum(1.0 / np.arange(1, 11))
    assert abs(f - (h10 - 1.0) / h10) < 1e-12
    assert abs(f - 0.6586) < 1e-4
    assert f < np.mean(scores)


def test_fitness_permutation_invariant():
    rng = np.random.default_rng(8)
    scores = rng.uniform(0, 1, 10)
    f = rank_weighted_fitness(scores)
    for _ in range(5):
        assert rank_weighted_fitness(rng.permutation(scores)) == f


def test_fitness_below_mean_unless_equal():
    rng = np.random.default_rng(9)
    for _ in range(100):
        scores = rng.uniform(0, 1, 10)
        assert rank_weighted_fitness(scores) <= np.mean(scores) + 1e-15
    assert abs(rank_weighted_fitness([0.4] * 10) - 0.4) < 1e-15


def test_fitness_monotone_in_each_score():
    rng = np.random.default_rng(10)
    for _ in range(100):
        scores = rng.uniform(0, 1, 10)
        f = rank_weighted_fitness(scores)
        bumped = scores.copy()
        i = rng.integers(0, 10)
        bumped[i] = min(1.0, bumped[i] + rng.uniform(0, 0.5))
        assert rank_weighted_fitness(bumped) >= f - 1e-15


def test_evaluate_batch_worker_count_is_invisible():
    rng = np.random.default_rng(11)
    genomes = rng.uniform(-1, 1, (5, 21))
    pb = params_batch([decode(g) for g in genomes])
    cfg = TrialConfig(duration=20.0)
    seeds = [101, 202, 303]
    ref_fit, ref_scores = evaluate_batch(pb, seeds, cfg, workers=1)
    for workers in (2, 3, 4):
        fit, scores = evaluate_batch(pb, seeds, cfg, workers=workers)
        assert fit.tobytes() == ref_fit.tobytes()
        assert scores.tobytes() == ref_scores.tobytes()


def test_evaluate_solution_matches_batch():
    p = forward_driver()
    seeds = [7, 8]
    cfg = TrialConfig(duration=20.0)
    fit, scores = evaluate_batch(params_batch([p]), seeds, cfg)
    assert evaluate_solution(p, seeds, cfg) == fit[0]
    assert scores.shape == (1, 2)
    assert np.all(scores >= 0.0)
