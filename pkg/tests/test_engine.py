"""Batched stepping agrees with the scalar operations and stays finite."""

import numpy as np
import pytest

from duetsim import arena, ctrnn
from duetsim.arena import Body, WorldState, sense, update_pose
from duetsim.engine import NumericError, params_batch, simulate_batch, simulate_isolated
from duetsim.evolution import decode, random_genome
from duetsim.trial import TrialConfig, poses_for_seed, run_trial


def random_params(seed):
    return decode(random_genome(np.random.default_rng(seed)))


def manual_step(params, states, bodies, emission, dt):
    """One full step via the scalar ops: sense, integrate, move."""
    world = WorldState(bodies=tuple(bodies), com_velocities=np.zeros((2, 2)),
                       emission=emission)
    new_states, new_bodies, intensities = [], [], []
    currents = []
    for i in (0, 1):
        inten = sense(world, i)
        intensities.append(inten)
        currents.append(params.input_gains @ inten)
    for i in (0, 1):
        s = ctrnn.step_rk4(params, states[i], currents[i], dt)
        new_states.append(s)
        v1, v2 = ctrnn.motor_velocities(params, s)
        new_bodies.append(update_pose(bodies[i], v1, v2, dt))
    return new_states, new_bodies, intensities


def test_batched_step_matches_scalar_ops():
    dt = 0.1
    for seed in range(5):
        params = random_params(seed)
        rng = np.random.default_rng(100 + seed)
        p1 = rng.uniform(-20, -10, 2)
        p2 = rng.uniform(10, 20, 2)
        h = rng.uniform(0, 2 * np.pi, 2)
        out = simulate_batch(params_batch([params]),
                             np.array([[p1, p2]]), h[None],
                             duration=5 * dt, dt=dt, record_stride=1)
        tr = out.trace

        states = [np.zeros(3), np.zeros(3)]
        bodies = [Body(p1, h[0]), Body(p2, h[1])]
        for step in range(1, 6):
            states, bodies, intensities = manual_step(
                params, states, bodies, 100.0, dt)
            np.testing.assert_allclose(tr.states[step, 0], states,
                                       rtol=0, atol=1e-12)
            np.testing.assert_allclose(
                tr.positions[step, 0],
                [bodies[0].position, bodies[1].position],
                rtol=0, atol=1e-12)
            np.testing.assert_allclose(
                tr.headings[step, 0], [bodies[0].heading, bodies[1].heading],
                rtol=0, atol=1e-12)
            np.testing.assert_allclose(tr.intensities[step, 0], intensities,
                                       rtol=0, atol=1e-12)


def head_on_params():
    return decode(np.concatenate([
        np.zeros(9), [1.0, 1.0, 0.0], [-1.0, -1.0, -1.0],
        np.zeros(4), [1.0, 1.0]]))


def head_on_config(**kw):
    poses = ((-6.0, 0.0, 0.0), (6.0, 0.0, np.pi))
    return TrialConfig(init_poses=poses, duration=20.0, **kw)


def test_ghost_run_shares_prefix_then_diverges():
    p = head_on_params()
    normal = run_trial(p, head_on_config())
    ghost = run_trial(p, head_on_config(collisions_enabled=False))
    assert len(normal.collision_times) > 0
    first = normal.collision_times[0]
    prefix = np.nonzero(normal.times < first)[0]
    for field in ("states", "positions", "headings", "distances"):
        a = getattr(normal, field)[prefix]
        b = getattr(ghost, field)[prefix]
        assert a.tobytes() == b.tobytes()
    after = np.nonzero(normal.times >= first)[0]
    assert not np.array_equal(normal.positions[after], ghost.positions[after])


def test_record_row_count():
    p = random_params(1)
    out = simulate_batch(params_batch([p]),
                         np.array([[[-15.0, 0.0], [15.0, 0.0]]]),
                         np.zeros((1, 2)), duration=300.0, dt=0.1,
                         record_stride=5)
    assert out.trace.states.shape[0] == 300.0 / 0.1 / 5 + 1


def test_non_finite_state_raises():
    p = random_params(2)
    bad = params_batch([p])
    weights = bad.weights.copy()
    weights[0, 0, 0] = np.inf
    bad = params_batch([p]).__class__(weights, bad.biases, bad.taus,
                                      bad.input_gains, bad.output_gains,
                                      bad.pruned2, bad.pruned2_value)
    with pytest.raises(NumericError):
        simulate_batch(bad, np.array([[[-15.0, 0.0], [15.0, 0.0]]]),
                       np.zeros((1, 2)), duration=10.0, dt=0.1)


def test_initial_overlap_rejected():
    p = random_params(3)
    with pytest.raises(ValueError):
        simulate_batch(params_batch([p]),
                       np.array([[[0.0, 0.0], [5.0, 0.0]]]),
                       np.zeros((1, 2)), duration=1.0, dt=0.1)


def test_partial_step_duration_rejected():
    p = random_params(3)
    with pytest.raises(ValueError):
        simulate_batch(params_batch([p]),
                       np.array([[[-15.0, 0.0], [15.0, 0.0]]]),
                       np.zeros((1, 2)), duration=0.55, dt=0.1)


def test_isolated_agent_ignores_world():
    # The silenced agent integrates exactly like the bare network.
    params = random_params(4)
    out = simulate_isolated(params, [3.0, -2.0], 0.7, duration=50.0, dt=0.1)
    lone = ctrnn.integrate(params, [0.0, 0.0], 50.0, dt=0.1)
    np.testing.assert_allclose(out.trace.states[:, 0, 0], lone,
                               rtol=0, atol=1e-12)
    np.testing.assert_array_equal(out.trace.intensities[:, 0, 0],
                                  np.zeros_like(out.trace.intensities[:, 0, 0]))


def test_refined_step_agreement_on_bounded_runs():
    # Integrating the same controller at dt = 0.1 and dt = 0.01 for 300
    # time units stays within 1e-4 per state variable for these draws.
    rng = np.random.default_rng(7)
    for _ in range(8):
        g = rng.uniform(-1, 1, 21)
        p = decode(g)
        inputs = rng.uniform(-5.0, 5.0, 2)
        coarse = ctrnn.integrate(p, inputs, 300.0, dt=0.1)
        fine = ctrnn.integrate(p, inputs, 300.0, dt=0.01)
        assert np.max(np.abs(coarse - fine[::10])) < 1e-4
