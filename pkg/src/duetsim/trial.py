"""Paired trials of cloned agents and the fitness they earn.

A trial drops two clones of one controller into an empty plane, far
apart, and runs them for a fixed duration.  The trial score rewards
reducing the initial separation:

    raw = (1 / T) * sum_t (d_init - d_t) / d_init

summed over every integration step; scores are clamped at 0 before
they enter fitness.  A controller is evaluated on a set of trials with
different random starting poses, and its fitness is a rank weighted
mean of the sorted clamped scores,

    fitness = sum_i s_(i) / i  /  sum_i 1 / i

with s_(1) the worst score.  The harmonic weights make the worst trial
count most, so consistent behaviour beats occasional luck.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .arena import BODY_RADIUS
from .ctrnn import CtrnnParams
from .engine import BatchOutcome, ParamsBatch, params_batch, simulate_batch, tile_params

N_TRIALS = 10
X_RANGE_FIRST = (-20.0, -5.0)
X_RANGE_SECOND = (5.0, 20.0)
Y_RANGE = (-20.0, 20.0)
MIN_START_DISTANCE = 2.0 * BODY_RADIUS + 1.0


@dataclass(frozen=True)
class TrialConfig:
    """Everything that defines one trial apart from the controller."""

    init_poses: tuple | None = None  # ((x, y, heading), (x, y, heading))
    duration: float = 300.0
    dt: float = 0.1
    collisions_enabled: bool = True
    emission: float = 100.0
    record_stride: int = 1


@dataclass
class TrialRecord:
    """Full log of one trial, one row per recorded step plus row 0."""

    config: TrialConfig
    times: np.ndarray        # (T,)
    states: np.ndarray       # (T, 2, 3)
    rates: np.ndarray        # (T, 2, 3)
    intensities: np.ndarray  # (T, 2, 2)
    motors: np.ndarray       # (T, 2, 2)
    positions: np.ndarray    # (T, 2, 2)
    headings: np.ndarray     # (T, 2)
    distances: np.ndarray    # (T,)
    d_init: float
    raw_score: float
    clamped_score: float
    collision_times: list
    degenerate_times: list


def sample_initial_conditions(rng: np.random.Generator) -> tuple:
    """Random starting poses, one agent on each side of the arena.

    The first agent starts with x in [-20, -5], the second with x in
    [5, 20], both with y in [-20, 20] and headings uniform in [0, 2pi).
    Draws are rejected until the centres are at least one unit clear of
    contact (the x ranges already guarantee this, the guard is belt and
    braces).
    """
    while True:
        x1 = rng.uniform(*X_RANGE_FIRST)
        y1 = rng.uniform(*Y_RANGE)
        x2 = rng.uniform(*X_RANGE_SECOND)
        y2 = rng.uniform(*Y_RANGE)
        h1 = rng.uniform(0.0, 2.0 * np.pi)
        h2 = rng.uniform(0.0, 2.0 * np.pi)
        if np.hypot(x2 - x1, y2 - y1) >= MIN_START_DISTANCE:
            return ((x1, y1, h1), (x2, y2, h2))


def poses_for_seed(seed: int) -> tuple:
    return sample_initial_conditions(np.random.default_rng(int(seed)))


def _pose_arrays(poses):
    poses = np.asarray(poses, dtype=float)
    return poses[:, :2][None], poses[:, 2][None]


def run_trial(params: CtrnnParams, config: TrialConfig) -> TrialRecord:
    """Run and fully record one trial of two cloned agents."""
    if config.init_poses is None:
        raise ValueError("config.init_poses is required for run_trial")
    if config.record_stride < 1:
        raise ValueError("record_stride must be >= 1 for a recorded trial")
    pos, head = _pose_arrays(config.init_poses)
    out = simulate_batch(params_batch([params]), pos, head,
                         config.duration, config.dt, config.emission,
                         collisions_enabled=config.collisions_enabled,
                         record_stride=config.record_stride,
                         collect_events=True)
    tr = out.trace
    raw = float(out.raw_scores[0])
    return TrialRecord(
        config=config,
        times=tr.times,
        states=tr.states[:, 0],
        rates=tr.rates[:, 0],
        intensities=tr.intensities[:, 0],
        motors=tr.motors[:, 0],
        positions=tr.positions[:, 0],
        headings=tr.headings[:, 0],
        distances=tr.distances[:, 0],
        d_init=float(out.d_init[0]),
        raw_score=raw,
        clamped_score=max(0.0, raw),
        collision_times=out.collision_times[0],
        degenerate_times=out.degenerate_times[0],
    )


def trial_score(record: TrialRecord) -> float:
    """Raw score recomputed from the logged distances.

    Matches `record.raw_score` when the record stride is 1; for larger
    strides it is a subsampled estimate of the stored exact value.
    """
    d = record.distances
    if len(d) < 2:
        raise ValueError("record holds no post-initial rows")
    return float(np.mean((record.d_init - d[1:]) / record.d_init))


def rank_weighted_fitness(scores) -> float:
    """Harmonic rank weighted mean of clamped scores, worst first."""
    s = np.sort(np.asarray(scores, dtype=float))
    weights = 1.0 / np.arange(1, len(s) + 1)
    return float(np.sum(s * weights) / np.sum(weights))


def evaluate_batch(pb: ParamsBatch, seeds, config: TrialConfig | None = None,
                   workers: int = 1):
    """Score every controller of a batch on every seeded trial.

    All controllers see the same starting poses (one pose pair per
    seed), so fitness comparisons within a generation are paired.

    Returns:
        (fitness, scores): fitness is (P,), scores is (P, n_seeds) of
        clamped per-trial scores.
    """
    if config is None:
        config = TrialConfig()
    n = len(pb)
    poses = [poses_for_seed(s) for s in seeds]
    pos_list, head_list = [], []
    for p in poses:
        pp, hh = _pose_arrays(p)
        pos_list.append(np.repeat(pp, n, axis=0))
        head_list.append(np.repeat(hh, n, axis=0))
    pos = np.concatenate(pos_list)
    head = np.concatenate(head_list)
    full = tile_params(pb, len(seeds))

    def run_rows(sel) -> BatchOutcome:
        return simulate_batch(full.rows(sel), pos[sel], head[sel],
                              config.duration, config.dt, config.emission,
                              collisions_enabled=config.collisions_enabled)

    total = len(full)
    if workers <= 1:
        raw = run_rows(slice(0, total)).raw_scores
    else:
        bounds = np.linspace(0, total, workers + 1).astype(int)
        chunks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(lambda c: run_rows(c).raw_scores, chunks))
        raw = np.concatenate(parts)

    scores = np.maximum(0.0, raw).reshape(len(seeds), n).T
    fitness = np.array([rank_weighted_fitness(row) for row in scores])
    return fitness, scores


def evaluate_solution(params: CtrnnParams, seeds,
                      config: TrialConfig | None = None) -> float:
    """Fitness of one controller over the seeded trial set."""
    fitness, _ = evaluate_batch(params_batch([params]), seeds, config)
    return float(fitness[0])


def mean_score(params: CtrnnParams, seeds, config: TrialConfig | None = None) -> float:
    """Mean clamped trial score of one controller over the seed set."""
    _, scores = evaluate_batch(params_batch([params]), seeds, config)
    return float(np.mean(scores[0]))
