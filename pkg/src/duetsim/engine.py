"""Batched two-agent trial stepping.

This module advances many independent trials in lockstep with plain
numpy array operations.  One batch row holds one pair of cloned agents
with its own controller parameters and initial poses, so a whole
population times its evaluation trials can be simulated in a single
call.  A recorded single trial is just a batch of one row.

The per-step order is fixed: sense, integrate both controllers one RK4
step with the sensor drive held constant, compute wheel velocities from
the new neural state, update poses, then detect and resolve collisions.
A collision swaps the two centre of mass velocities, replays the step's
displacement with the swapped velocities, and removes any remaining
overlap by a symmetric push to exact contact (see `arena`).  Headings
are never touched by collisions.

Every operation is elementwise per row or contracts over fixed small
axes, so results are bitwise identical no matter how the batch is
chunked.  `evaluate_*` style callers exploit this to fan rows out over
worker threads and still reproduce byte-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .arena import BODY_RADIUS, MIN_SOUND_DISTANCE, SHADOW_ATTENUATION
from .ctrnn import CtrnnParams, rk4_step

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class NumericError(RuntimeError):
    """A simulation produced a non-finite state."""


@dataclass(frozen=True)
class ParamsBatch:
    """Stacked controller parameters, one row per trial."""

    weights: np.ndarray       # (B, 3, 3)
    biases: np.ndarray        # (B, 3)
    taus: np.ndarray          # (B, 3)
    input_gains: np.ndarray   # (B, 2, 2)
    output_gains: np.ndarray  # (B, 2)
    pruned2: np.ndarray       # (B,) bool, motor neuron 2 frozen
    pruned2_value: np.ndarray  # (B,) constant firing rate where frozen

    def __len__(self):
        return self.weights.shape[0]

    def rows(self, sel) -> "ParamsBatch":
        return ParamsBatch(self.weights[sel], self.biases[sel],
                           self.taus[sel], self.input_gains[sel],
                           self.output_gains[sel], self.pruned2[sel],
                           self.pruned2_value[sel])


def params_batch(params_list) -> ParamsBatch:
    """Stack a sequence of CtrnnParams into one batch."""
    params_list = list(params_list)
    return ParamsBatch(
        weights=np.stack([p.weights for p in params_list]),
        biases=np.stack([p.biases for p in params_list]),
        taus=np.stack([p.taus for p in params_list]),
        input_gains=np.stack([p.input_gains for p in params_list]),
        output_gains=np.stack([p.output_gains for p in params_list]),
        pruned2=np.array([p.pruned_output_2 is not None for p in params_list]),
        pruned2_value=np.array([p.pruned_output_2 or 0.0 for p in params_list]),
    )


def tile_params(pb: ParamsBatch, reps: int) -> ParamsBatch:
    """Repeat the whole batch `reps` times (for shared trial layouts)."""
    return ParamsBatch(*[np.concatenate([f] * reps) for f in
                         (pb.weights, pb.biases, pb.taus, pb.input_gains,
                          pb.output_gains, pb.pruned2, pb.pruned2_value)])


@dataclass
class TrialTrace:
    """Row-0-inclusive recording of one batch of trials (stride applied)."""

    times: np.ndarray        # (T,)
    states: np.ndarray       # (T, B, 2, 3)
    rates: np.ndarray        # (T, B, 2, 3) firing rates sigma(s + theta)
    intensities: np.ndarray  # (T, B, 2, 2) drive sensed for the step ending here
    motors: np.ndarray       # (T, B, 2, 2) wheel velocities from the row state
    positions: np.ndarray    # (T, B, 2, 2)
    headings: np.ndarray     # (T, B, 2)
    distances: np.ndarray    # (T, B)


@dataclass
class BatchOutcome:
    raw_scores: np.ndarray        # (B,) mean of (d_init - d_t) / d_init
    d_init: np.ndarray            # (B,)
    collision_counts: np.ndarray  # (B,)
    collision_times: list | None    # per row, when collect_events
    degenerate_times: list | None
    trace: TrialTrace | None


def _rates(s, theta, pruned2, p2val):
    rates = expit(s + theta)
    if pruned2.any():
        rates[..., 1] = np.where(pruned2[:, None], p2val[:, None], rates[..., 1])
    return rates


def simulate_batch(pb: ParamsBatch, init_positions, init_headings,
                   duration: float, dt: float = 0.1, emission: float = 100.0,
                   collisions_enabled: bool = True, zero_input: bool = False,
                   record_stride: int = 0, collect_events: bool = False) -> BatchOutcome:
    """Run all rows of the batch for `duration` time units.

    Args:
        pb: stacked controller parameters, both agents of a row share one set.
        init_positions: (B, 2, 2) initial centre positions.
        init_headings: (B, 2) initial headings.
        record_stride: 0 disables recording, k keeps every k-th step plus row 0.
        zero_input: force all sensor intensities to 0 (isolated condition).

    Returns:
        BatchOutcome with per-row scores and optional trace/events.
    """
    n_steps = int(round(duration / dt))
    if abs(n_steps * dt - duration) > 1e-9:
        raise ValueError("duration must be a whole number of steps")
    b = len(pb)
    pos = np.array(init_positions, dtype=float)
    head = np.array(init_headings, dtype=float)
    if pos.shape != (b, 2, 2) or head.shape != (b, 2):
        raise ValueError("initial pose arrays do not match the batch size")

    w = pb.weights
    theta = pb.biases[:, None]
    tau = pb.taus[:, None]
    gin_t = np.ascontiguousarray(pb.input_gains.transpose(0, 2, 1))
    gout = pb.output_gains[:, None]
    radius = BODY_RADIUS
    contact = 2.0 * radius
    r_sq = radius * radius

    s = np.zeros((b, 2, 3))
    drive = np.zeros((b, 2, 3))
    inten = np.zeros((b, 2, 2))
    delta = pos[:, 1] - pos[:, 0]
    dist = np.sqrt(delta[:, 0] ** 2 + delta[:, 1] ** 2)
    d_init = dist.copy()
    if np.any(d_init < 1e-12):
        raise ValueError("initial centre distance must be positive")
    if collisions_enabled and np.any(d_init < contact):
        raise ValueError("initial poses overlap")
    score = np.zeros(b)
    counts = np.zeros(b, dtype=int)
    col_times = [[] for _ in range(b)] if collect_events else None
    degen_times = [[] for _ in range(b)] if collect_events else None

    trace = None
    if record_stride:
        if n_steps % record_stride:
            raise ValueError("record stride must divide the step count")
        t_rows = n_steps // record_stride + 1
        trace = TrialTrace(
            times=np.arange(t_rows) * (dt * record_stride),
            states=np.empty((t_rows, b, 2, 3)),
            rates=np.empty((t_rows, b, 2, 3)),
            intensities=np.empty((t_rows, b, 2, 2)),
            motors=np.empty((t_rows, b, 2, 2)),
            positions=np.empty((t_rows, b, 2, 2)),
            headings=np.empty((t_rows, b, 2)),
            distances=np.empty((t_rows, b)),
        )

    def log_row(idx, motors):
        trace.states[idx] = s
        trace.rates[idx] = _rates(s, theta, pb.pruned2, pb.pruned2_value)
        trace.intensities[idx] = inten
        trace.motors[idx] = motors
        trace.positions[idx] = pos
        trace.headings[idx] = head
        trace.distances[idx] = dist

    sens_x = np.empty((b, 2, 2))
    sens_y = np.empty((b, 2, 2))

    for k in range(n_steps):
        cos_h = np.cos(head)
        sin_h = np.sin(head)
        if not zero_input:
            # sensor offsets at heading +-pi/4 via the angle addition formulas
            px, py = pos[:, :, 0], pos[:, :, 1]
            sens_x[:, :, 0] = px + radius * _INV_SQRT2 * (cos_h - sin_h)
            sens_x[:, :, 1] = px + radius * _INV_SQRT2 * (cos_h + sin_h)
            sens_y[:, :, 0] = py + radius * _INV_SQRT2 * (sin_h + cos_h)
            sens_y[:, :, 1] = py + radius * _INV_SQRT2 * (sin_h - cos_h)
            src = pos[:, ::-1]
            dx = src[:, :, 0, None] - sens_x
            dy = src[:, :, 1, None] - sens_y
            d_sen_sq = dx * dx + dy * dy
            d_sen = np.sqrt(d_sen_sq)
            a = (dist * dist - r_sq)[:, None, None] / np.maximum(d_sen_sq, 1e-24)
            np.clip(a, 0.0, 1.0, out=a)
            d_sh = np.clip(d_sen * (1.0 - a), 0.0, contact)
            inten = (emission / np.maximum(d_sen, MIN_SOUND_DISTANCE) ** 2
                     * (1.0 - SHADOW_ATTENUATION / contact * d_sh))
            drive[..., :2] = inten @ gin_t

        if record_stride and k == 0:
            rates0 = _rates(s, theta, pb.pruned2, pb.pruned2_value)
            log_row(0, gout * (2.0 * rates0[..., :2] - 1.0))

        s = rk4_step(s, drive, w, theta, tau, dt)

        rates = _rates(s[..., :2], theta[..., :2], pb.pruned2, pb.pruned2_value)
        v = gout * (2.0 * rates - 1.0)
        # disp holds this step's displacement, wheel velocities times dt
        step_len = 0.5 * dt * (v[..., 0] + v[..., 1])
        disp = np.empty((b, 2, 2))
        disp[..., 0] = step_len * cos_h
        disp[..., 1] = step_len * sin_h
        pos = pos + disp
        head = head + (v[..., 0] - v[..., 1]) * (dt / contact)

        delta = pos[:, 1] - pos[:, 0]
        dist = np.sqrt(delta[:, 0] ** 2 + delta[:, 1] ** 2)
        if collisions_enabled:
            hit = dist < contact
            if hit.any():
                swapped = disp[:, ::-1]
                replay = pos + (swapped - disp)
                delta2 = replay[:, 1] - replay[:, 0]
                dist2 = np.sqrt(delta2[:, 0] ** 2 + delta2[:, 1] ** 2)
                still = dist2 < contact
                degen = dist2 < 1e-12
                axis = np.where(degen[:, None], np.array([1.0, 0.0]),
                                delta2 / np.maximum(dist2, 1e-12)[:, None])
                push = np.where(still, 0.5 * (contact - dist2), 0.0)
                sep = np.stack([replay[:, 0] - push[:, None] * axis,
                                replay[:, 1] + push[:, None] * axis], axis=1)
                pos = np.where(hit[:, None, None], sep, pos)
                delta = pos[:, 1] - pos[:, 0]
                dist = np.sqrt(delta[:, 0] ** 2 + delta[:, 1] ** 2)
                counts += hit
                if collect_events:
                    now = (k + 1) * dt
                    for row in np.nonzero(hit)[0]:
                        col_times[row].append(now)
                    for row in np.nonzero(hit & degen)[0]:
                        degen_times[row].append(now)

        score += (d_init - dist) / d_init
        if (k & 15) == 15 and not np.isfinite(np.sum(s) + np.sum(pos)):
            raise NumericError(f"non-finite state near t = {(k + 1) * dt:g}")

        if record_stride and (k + 1) % record_stride == 0:
            log_row((k + 1) // record_stride, v)

    if not np.isfinite(np.sum(s) + np.sum(pos)):
        raise NumericError(f"non-finite state at t = {n_steps * dt:g}")

    return BatchOutcome(raw_scores=score / n_steps, d_init=d_init,
                        collision_counts=counts, collision_times=col_times,
                        degenerate_times=degen_times, trace=trace)


def simulate_isolated(params: CtrnnParams, init_position, init_heading,
                      duration: float, dt: float = 0.1,
                      record_stride: int = 1) -> BatchOutcome:
    """Single agent with its sensors silenced; nothing else exists.

    The trace carries agent index 0 only; distances and scores are
    meaningless and left at their defaults.
    """
    pb = params_batch([params])
    pos = np.zeros((1, 2, 2))
    pos[0, 0] = np.asarray(init_position, dtype=float)
    pos[0, 1] = np.array([1e6, 1e6])  # far-away placeholder row, inert
    heads = np.array([[float(init_heading), 0.0]])
    return simulate_batch(pb, pos, heads, duration, dt,
                          collisions_enabled=False, zero_input=True,
                          record_stride=record_stride)
