"""Embodied agents on an unbounded plane, coupled through sound.

Each agent is a rigid disc of radius 4 with two diametrically opposed
motors at heading +-pi/2 (motor 1 on the right, motor 2 on the left)
and two sound sensors on the front half of its circumference at
heading +-pi/4 (sensor 1 left of the nose, sensor 2 right of it).
Agents emit sound omnidirectionally from their centre and hear only
the other agent, never themselves.

Sound is partially occluded by the listener's own body.  For a source
at distance D from the listener's centre and D_sen from the sensor,
the shadowed path length is

    D_sh = D_sen * (1 - A),    A = (D^2 - R^2) / D_sen^2

with A clamped to [0, 1] and D_sh to [0, 2R]; a sensor with a free
line to the source (A >= 1) hears unattenuated sound.  The intensity
at the sensor is

    I = emission / max(D_sen, 0.1)^2 * (1 - 0.9 * D_sh / (2R))

so a fully shadowed sensor keeps 10% of the unshadowed intensity and
the inverse square law is floored at distance 0.1 to avoid blow-up.

Bodies collide like point particles: an overlap swaps the two centre
of mass velocities (a perfect elastic exchange between equal masses),
leaves headings and angular velocities untouched, and separates the
discs to exact contact by a symmetric push along the centre line.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

BODY_RADIUS = 4.0
SENSOR_ANGLES = (np.pi / 4.0, -np.pi / 4.0)
MIN_SOUND_DISTANCE = 0.1
SHADOW_ATTENUATION = 0.9


@dataclass(frozen=True)
class Body:
    """Pose of one circular agent body."""

    position: np.ndarray
    heading: float
    radius: float = BODY_RADIUS

    def __post_init__(self):
        pos = np.array(self.position, dtype=float)
        if pos.shape != (2,):
            raise ValueError("position must be a 2-vector")
        pos.setflags(write=False)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "heading", float(self.heading))


def sensor_positions(body: Body) -> np.ndarray:
    """World coordinates of the two sensors, shape (2, 2), sensor 1 first."""
    angles = body.heading + np.asarray(SENSOR_ANGLES)
    return body.position + body.radius * np.stack(
        [np.cos(angles), np.sin(angles)], axis=-1)


def update_pose(body: Body, v1: float, v2: float, dt: float) -> Body:
    """Advance the pose one step of differential steering.

    The translational speed is the mean of the two wheel velocities and
    acts along the heading at the start of the step; the heading then
    turns by (v1 - v2) / (2 * radius) * dt.  Positive wheel velocities
    drive the agent forward, and a faster right motor (v1 > v2) turns
    it counterclockwise.
    """
    speed = 0.5 * (v1 + v2)
    direction = np.array([np.cos(body.heading), np.sin(body.heading)])
    position = body.position + speed * dt * direction
    heading = body.heading + (v1 - v2) / (2.0 * body.radius) * dt
    return Body(position, heading, body.radius)


def shadow_distance(source, sensor, listener: Body) -> float:
    """Length of the sound path occluded by the listener's own body.

    Returns 0 for a sensor with an unobstructed line to the source and
    at most 2 * radius for a sensor diametrically opposite it.
    """
    source = np.asarray(source, dtype=float)
    sensor = np.asarray(sensor, dtype=float)
    d_sen = float(np.hypot(*(source - sensor)))
    if d_sen < 1e-12:
        return 0.0
    d = float(np.hypot(*(source - listener.position)))
    a = (d * d - listener.radius ** 2) / (d_sen * d_sen)
    a = min(max(a, 0.0), 1.0)
    d_sh = d_sen * (1.0 - a)
    return min(max(d_sh, 0.0), 2.0 * listener.radius)


def sensor_intensity(source, emission: float, sensor, listener: Body) -> float:
    """Sound intensity registered at one sensor."""
    source = np.asarray(source, dtype=float)
    sensor = np.asarray(sensor, dtype=float)
    d_sen = float(np.hypot(*(source - sensor)))
    d_sh = shadow_distance(source, sensor, listener)
    attenuation = 1.0 - SHADOW_ATTENUATION * d_sh / (2.0 * listener.radius)
    return emission / max(d_sen, MIN_SOUND_DISTANCE) ** 2 * attenuation


@dataclass(frozen=True)
class WorldState:
    """Instantaneous state of the two-agent world."""

    bodies: tuple[Body, Body]
    com_velocities: np.ndarray
    emission: float = 100.0
    collisions_enabled: bool = True
    time: float = 0.0

    def __post_init__(self):
        vel = np.array(self.com_velocities, dtype=float)
        if vel.shape != (2, 2):
            raise ValueError("com_velocities must have shape (2, 2)")
        vel.setflags(write=False)
        object.__setattr__(self, "com_velocities", vel)


def sense(state: WorldState, listener_index: int) -> np.ndarray:
    """Intensities at the listener's two sensors from the other agent.

    The source is the other agent's centre; an agent never hears its
    own emission.
    """
    listener = state.bodies[listener_index]
    source = state.bodies[1 - listener_index].position
    sensors = sensor_positions(listener)
    return np.array([
        sensor_intensity(source, state.emission, sensors[0], listener),
        sensor_intensity(source, state.emission, sensors[1], listener),
    ])


def resolve_collision(state: WorldState, dt: float = 0.0):
    """Resolve an overlap between the two bodies.

    Swaps the two centre of mass velocities, keeping headings as they
    are.  With dt > 0 the displacement of the step that produced the
    overlap is replayed with the swapped velocities; any remaining
    overlap is removed by a symmetric push to exact contact along the
    centre line.  Coincident centres are separated along +x and
    reported as degenerate.

    Returns:
        (new_state, degenerate) where degenerate flags the coincident
        centre case.
    """
    if not state.collisions_enabled:
        raise ValueError("collisions are disabled in this state")
    b1, b2 = state.bodies
    v1, v2 = state.com_velocities
    p1, p2 = b1.position, b2.position
    if dt > 0.0:
        p1 = p1 + (v2 - v1) * dt
        p2 = p2 + (v1 - v2) * dt
    delta = p2 - p1
    dist = float(np.hypot(*delta))
    contact = b1.radius + b2.radius
    degenerate = False
    if dist < contact:
        if dist < 1e-12:
            axis = np.array([1.0, 0.0])
            degenerate = True
        else:
            axis = delta / dist
        push = 0.5 * (contact - dist)
        p1 = p1 - push * axis
        p2 = p2 + push * axis
    bodies = (Body(p1, b1.heading, b1.radius), Body(p2, b2.heading, b2.radius))
    new_state = replace(state, bodies=bodies,
                        com_velocities=np.stack([v2, v1]))
    return new_state, degenerate
