"""Reference dynamical systems with known properties.

These generators produce series whose embedding dimension, largest
Lyapunov exponent, and determinism factor are known from theory or
from long-established numerical studies.  They are used to calibrate
and validate the analysis routines in :mod:`duetsim.tsa` before those
routines are pointed at simulated agent data.
"""

from __future__ import annotations

import numpy as np


def logistic_map(n, r=4.0, x0=0.4, discard=100):
    """Iterate x' = r x (1 - x) and return n samples after a transient.

    At r = 4 the map is fully chaotic with largest Lyapunov exponent
    ln 2 per iteration.
    """
    if n < 1:
        raise ValueError("n must be positive")
    x = float(x0)
    for _ in range(discard):
        x = r * x * (1.0 - x)
    out = np.empty(n)
    for i in range(n):
        out[i] = x
        x = r * x * (1.0 - x)
    return out


def henon_map(n, a=1.4, b=0.3, x0=0.0, y0=0.0, discard=100):
    """Return the x series of the Henon map after a transient.

    The classic parameter pair (1.4, 0.3) gives a chaotic attractor
    that embeds cleanly in two dimensions.
    """
    if n < 1:
        raise ValueError("n must be positive")
    x, y = float(x0), float(y0)
    for _ in range(discard):
        x, y = 1.0 - a * x * x + y, b * x
    out = np.empty(n)
    for i in range(n):
        out[i] = x
        x, y = 1.0 - a * x * x + y, b * x
    return out


def _lorenz_deriv(state, sigma, rho, beta):
    x, y, z = state
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def lorenz_x(n, dt=0.01, sigma=10.0, rho=28.0, beta=8.0 / 3.0,
             init=(1.0, 1.0, 1.0), discard=1000):
    """Integrate the Lorenz system with RK4 and return the x coordinate.

    Parameters
    ----------
    n : number of samples to keep after the discarded transient.
    dt : integration and sampling step.
    discard : steps dropped so sampling starts on the attractor.
    """
    if n < 1:
        raise ValueError("n must be positive")
    state = np.asarray(init, dtype=float)
    out = np.empty(n)
    total = discard + n
    for i in range(total):
        if i >= discard:
            out[i - discard] = state[0]
        k1 = _lorenz_deriv(state, sigma, rho, beta)
        k2 = _lorenz_deriv(state + 0.5 * dt * k1, sigma, rho, beta)
        k3 = _lorenz_deriv(state + 0.5 * dt * k2, sigma, rho, beta)
        k4 = _lorenz_deriv(state + dt * k3, sigma, rho, beta)
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return out


def sine_wave(n, samples_per_period=100.0, amplitude=1.0, phase=0.0):
    """Sample a pure sine at a fixed number of samples per period.

    A non-integer samples_per_period avoids the exact revisiting of a
    finite set of phases, which matters for neighbor-based statistics.
    """
    t = np.arange(n)
    return amplitude * np.sin(2.0 * np.pi * t / samples_per_period + phase)


def white_noise(n, rng=None, seed=0):
    """Independent standard normal samples."""
    if rng is None:
        rng = np.random.default_rng(seed)
    return rng.standard_normal(n)


def shuffle_surrogate(values, rng=None, seed=0):
    """Random temporal permutation of a series.

    Destroys all dynamical structure while preserving the amplitude
    distribution, so determinism statistics should collapse.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    return rng.permutation(np.asarray(values, dtype=float))


def exponential_relaxation(n, dt=0.1, tau=5.0, x0=1.0, x_inf=0.0):
    """Samples of x(t) = x_inf + (x0 - x_inf) exp(-t / tau).

    The archetype of a contracting series: any divergence estimate on
    it must come out negative.
    """
    t = dt * np.arange(n)
    return x_inf + (x0 - x_inf) * np.exp(-t / tau)
