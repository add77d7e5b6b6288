"""Body kinematics, sound field geometry and collision handling."""

import numpy as np
import pytest

from duetsim import arena
from duetsim.arena import (BODY_RADIUS, Body, WorldState, resolve_collision,
                           sense, sensor_intensity, sensor_positions,
                           shadow_distance, update_pose)


def body_at(x=0.0, y=0.0, heading=0.0):
    return Body(np.array([x, y]), heading)


def test_sensor_positions_front_half():
    b = body_at()
    pos = sensor_positions(b)
    r = BODY_RADIUS / np.sqrt(2.0)
    np.testing.assert_allclose(pos[0], [r, r], atol=1e-12)
    np.testing.assert_allclose(pos[1], [r, -r], atol=1e-12)


def test_pose_straight_ahead():
    b = update_pose(body_at(), 1.0, 1.0, 1.0)
    np.testing.assert_allclose(b.position, [1.0, 0.0], atol=1e-15)
    assert b.heading == 0.0


def test_pose_pure_spin():
    b = update_pose(body_at(), 1.0, -1.0, 1.0)
    np.testing.assert_allclose(b.position, [0.0, 0.0], atol=1e-15)
    assert abs(b.heading - 0.25) < 1e-15


def test_pose_arc_step():
    b = update_pose(body_at(), 1.0, 0.0, 0.1)
    np.testing.assert_allclose(b.position, [0.05, 0.0], atol=1e-15)
    assert abs(b.heading - 0.0125) < 1e-15


def test_pose_reversible_for_small_steps():
    rng = np.random.default_rng(2)
    for _ in range(20):
        start = Body(rng.uniform(-10, 10, 2), rng.uniform(0, 2 * np.pi))
        v1, v2 = rng.uniform(-2, 2, 2)
        dt = 1e-5
        fwd = update_pose(start, v1, v2, dt)
        back = update_pose(fwd, -v1, -v2, dt)
        assert np.max(np.abs(back.position - start.position)) < 1e-9
        assert abs(back.heading - start.heading) < 1e-9


def test_shadow_zero_on_direct_line():
    assert shadow_distance([10.0, 0.0], [4.0, 0.0], body_at()) == 0.0


def test_shadow_max_opposite_sensor():
    d = shadow_distance([10.0, 0.0], [-4.0, 0.0], body_at())
    assert abs(d - 2.0 * BODY_RADIUS) < 1e-12


def test_shadow_oblique_value():
    d = shadow_distance([10.0, 0.0], [0.0, 4.0], body_at())
    assert abs(d - 32.0 / np.sqrt(116.0)) < 1e-12
    assert abs(d - 2.971) < 1e-3


def test_shadow_bounds_property():
    rng = np.random.default_rng(3)
    for _ in range(500):
        listener = Body(rng.uniform(-20, 20, 2), rng.uniform(0, 2 * np.pi))
        angle = rng.uniform(0, 2 * np.pi)
        distance = rng.uniform(2 * BODY_RADIUS, 100.0)
        source = listener.position + distance * np.array(
            [np.cos(angle), np.sin(angle)])
        for sensor in sensor_positions(listener):
            d = shadow_distance(source, sensor, listener)
            assert 0.0 <= d <= 2.0 * BODY_RADIUS


def test_intensity_inverse_square_no_shadow():
    # Sensor on the near side, source 10 units from it, direct line.
    i = sensor_intensity([14.0, 0.0], 100.0, [4.0, 0.0], body_at())
    assert abs(i - 1.0) < 1e-12


def test_intensity_full_shadow_floor():
    # Same sensor-source distance but fully occluded: factor 0.1.
    i = sensor_intensity([6.0, 0.0], 100.0, [-4.0, 0.0], body_at())
    assert abs(i - 0.1) < 1e-12


def test_intensity_spike_at_contact():
    i = sensor_intensity([4.0, 0.0], 100.0, [4.0, 0.0], body_at())
    assert i == 100.0 / arena.MIN_SOUND_DISTANCE ** 2
    assert i == 10000.0


def make_world(b1, b2, collisions=True):
    return WorldState(bodies=(b1, b2), com_velocities=np.zeros((2, 2)),
                      collisions_enabled=collisions)


def test_sense_far_apart_is_faint():
    w = make_world(body_at(0, 0, heading=np.pi), body_at(1000.0, 0.0))
    assert np.all(sense(w, 0) < 1e-4)


def test_sense_head_on_symmetry():
    w = make_world(body_at(0, 0, heading=0.0), body_at(30.0, 0.0))
    i = sense(w, 0)
    np.testing.assert_allclose(i[0], i[1], rtol=1e-12)


def test_sense_side_asymmetry():
    # Heading +90 degrees: sensor 1 (left-front) faces away from the
    # source, sensor 2 faces toward it.
    w = make_world(body_at(0, 0, heading=np.pi / 2), body_at(30.0, 0.0))
    i = sense(w, 0)
    assert i[1] > i[0]


def test_sense_mirror_symmetry():
    rng = np.random.default_rng(4)
    for _ in range(50):
        p1 = rng.uniform(-20, 20, 2)
        h1 = rng.uniform(0, 2 * np.pi)
        p2 = p1 + rng.uniform(9, 40) * np.array([np.cos(a := rng.uniform(0, 2 * np.pi)), np.sin(a)])
        h2 = rng.uniform(0, 2 * np.pi)
        w = make_world(Body(p1, h1), Body(p2, h2))
        # Reflect everything about the x axis.
        wr = make_world(Body(p1 * [1, -1], -h1), Body(p2 * [1, -1], -h2))
        np.testing.assert_allclose(sense(w, 0), sense(wr, 0)[::-1], rtol=1e-9)
        np.testing.assert_allclose(sense(w, 1), sense(wr, 1)[::-1], rtol=1e-9)


def test_collision_head_on_swap():
    w = WorldState(bodies=(body_at(-3.9, 0), body_at(3.9, 0)),
                   com_velocities=np.array([[1.0, 0.0], [-1.0, 0.0]]))
    out, degenerate = resolve_collision(w)
    assert not degenerate
    np.testing.assert_array_equal(out.com_velocities[0], [-1.0, 0.0])
    np.testing.assert_array_equal(out.com_velocities[1], [1.0, 0.0])


def test_collision_identical_velocities_noop():
    v = np.array([[0.3, -0.2], [0.3, -0.2]])
    w = WorldState(bodies=(body_at(-3.9, 0), body_at(3.9, 0)),
                   com_velocities=v)
    out, _ = resolve_collision(w)
    np.testing.assert_array_equal(out.com_velocities, v)


def test_collision_momentum_and_separation_randomized():
    rng = np.random.default_rng(6)
    contact = 2.0 * BODY_RADIUS
    for _ in range(10000):
        p1 = rng.uniform(-5, 5, 2)
        # Overlapping placement, sometimes deeply.
        offset_angle = rng.uniform(0, 2 * np.pi)
        p2 = p1 + rng.uniform(0.0, contact) * np.array(
            [np.cos(offset_angle), np.sin(offset_angle)])
        vel = rng.uniform(-2, 2, (2, 2))
        w = WorldState(bodies=(Body(p1, 0.0), Body(p2, 0.0)),
                       com_velocities=vel)
        out, _ = resolve_collision(w, dt=0.1)
        before = vel[0] + vel[1]
        after = out.com_velocities[0] + out.com_velocities[1]
        np.testing.assert_array_equal(before, after)
        dist = np.hypot(*(out.bodies[1].position - out.bodies[0].position))
        assert dist >= contact - 1e-9


def test_collision_degenerate_coincident():
    w = WorldState(bodies=(body_at(1.0, 2.0), body_at(1.0, 2.0)),
                   com_velocities=np.array([[0.5, 0.0], [0.0, 0.0]]))
    out, degenerate = resolve_collision(w)
    assert degenerate
    delta = out.bodies[1].position - out.bodies[0].position
    np.testing.assert_allclose(delta, [2.0 * BODY_RADIUS, 0.0], atol=1e-12)


def test_collision_disabled_raises():
    w = make_world(body_at(-3.0, 0), body_at(3.0, 0), collisions=False)
    with pytest.raises(ValueError):
        resolve_collision(w)
