"""Continuous-time recurrent neural networks with logistic activation.

The controllers simulated here are small fully connected CTRNNs.  Each
neuron i has state s_i, bias theta_i and time constant tau_i, and obeys

    tau_i ds_i/dt = -s_i + sum_j w_ji * sigma(s_j + theta_j) + I_i

where sigma is the logistic function and I_i is the external input
current (nonzero only for the two sensor neurons).  Neuron activation
gain is fixed at 1 and is not a parameter.  Networks are integrated
with the classical fourth order Runge-Kutta scheme; inputs are held
constant across the substeps of one integration step.

Neurons are numbered 1..3.  Neurons 1 and 2 receive sensor input and
drive the two motors, neuron 3 is an interneuron with neither sensor
input nor motor output.  Networks can be reduced in place by pruning
(see `prune_neuron`): first the interneuron, then motor neuron 2, whose
motor output is then frozen at the constant sigma(theta_2).

All array-level helpers broadcast over leading batch axes so that many
networks can be stepped in a single call.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

N_NEURONS = 3
N_SENSORS = 2
N_MOTORS = 2


def logistic(x):
    """Logistic sigmoid 1 / (1 + exp(-x)), saturation-safe for large |x|."""
    return expit(x)


@dataclass(frozen=True)
class CtrnnParams:
    """Parameters of one (possibly pruned) 3-neuron controller.

    Attributes:
        weights: (3, 3) array, weights[j, i] is the connection from
            neuron j+1 to neuron i+1.
        biases: (3,) array of neuron biases theta.
        taus: (3,) array of time constants, all >= 1.
        input_gains: (2, 2) array, input_gains[i, k] couples sensor k+1
            into neuron i+1 (only neurons 1 and 2 receive input).
        output_gains: (2,) array of motor gains for neurons 1 and 2.
        n: number of active neurons (3, 2 or 1).
        pruned_output_2: constant firing rate sigma(theta_2) recorded
            when motor neuron 2 is pruned, else None.
    """

    weights: np.ndarray
    biases: np.ndarray
    taus: np.ndarray
    input_gains: np.ndarray
    output_gains: np.ndarray
    n: int = N_NEURONS
    pruned_output_2: float | None = None

    def __post_init__(self):
        for name, shape in (("weights", (3, 3)), ("biases", (3,)),
                            ("taus", (3,)), ("input_gains", (2, 2)),
                            ("output_gains", (2,))):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.taus < 1.0):
            raise ValueError("time constants must be >= 1")
        if self.n not in (1, 2, 3):
            raise ValueError("active neuron count must be 1, 2 or 3")


def state_derivative(state, drive, weights, biases, taus):
    """ds/dt for the CTRNN state equation.

    Args:
        state: (..., 3) neuron states.
        drive: (..., 3) input currents (third component normally 0).
        weights: (..., 3, 3) with weights[..., j, i] = connection j -> i.
        biases, taus: (..., 3).

    Returns:
        (..., 3) time derivative of the state.
    """
    firing = expit(state + biases)
    out = firing @ weights
    out -= state
    out += drive
    out /= taus
    return out


def rk4_step(state, drive, weights, biases, taus, dt):
    """One classical Runge-Kutta step with the drive held constant."""
    k1 = state_derivative(state, drive, weights, biases, taus)
    k2 = state_derivative(state + 0.5 * dt * k1, drive, weights, biases, taus)
    k3 = state_derivative(state + 0.5 * dt * k2, drive, weights, biases, taus)
    k4 = state_derivative(state + dt * k3, drive, weights, biases, taus)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def input_drive(params: CtrnnParams, inputs) -> np.ndarray:
    """Lift the two sensor intensities to per-neuron input currents.

    I_i = sum_k input_gains[i, k] * intensity_k for neurons 1 and 2,
    zero for the interneuron.
    """
    inputs = np.asarray(inputs, dtype=float)
    drive = np.zeros(N_NEURONS)
    drive[:N_SENSORS] = params.input_gains @ inputs
    return drive


def derivative(params: CtrnnParams, state, inputs) -> np.ndarray:
    """ds/dt given the two sensor input currents (I_1, I_2)."""
    inputs = np.asarray(inputs, dtype=float)
    drive = np.zeros(N_NEURONS)
    drive[:N_SENSORS] = inputs
    return state_derivative(np.asarray(state, dtype=float), drive,
                            params.weights, params.biases, params.taus)


def step_rk4(params: CtrnnParams, state, inputs, dt: float) -> np.ndarray:
    """Advance the state by one RK4 step of size dt.

    The input currents are zero-order held: all four substeps see the
    same (I_1, I_2).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    inputs = np.asarray(inputs, dtype=float)
    drive = np.zeros(N_NEURONS)
    drive[:N_SENSORS] = inputs
    return rk4_step(np.asarray(state, dtype=float), drive,
                    params.weights, params.biases, params.taus, dt)


def motor_velocity(sigma, gain):
    """Wheel velocity gain * (2*sigma - 1); sigma in (0,1) maps to +-gain."""
    return gain * (2.0 * sigma - 1.0)


def firing_rates(params: CtrnnParams, state) -> np.ndarray:
    """sigma(s_i + theta_i) for all three neurons.

    When motor neuron 2 is pruned its rate is the recorded constant,
    regardless of the (inert) state variable.
    """
    rates = expit(np.asarray(state, dtype=float) + params.biases)
    if params.pruned_output_2 is not None:
        rates = rates.copy()
        rates[1] = params.pruned_output_2
    return rates


def motor_velocities(params: CtrnnParams, state) -> np.ndarray:
    """Velocities of motors 1 and 2 for the given neural state."""
    rates = firing_rates(params, state)
    return motor_velocity(rates[:N_MOTORS], params.output_gains)


def prune_neuron(params: CtrnnParams, index: int) -> CtrnnParams:
    """Remove neuron `index` from the network.

    Pruning zeroes all incoming and outgoing connection weights of the
    neuron.  Only the interneuron (index 3) can be pruned first; motor
    neuron 2 (index 2) can be pruned afterwards, which additionally
    zeroes its input gains and freezes its motor output at the constant
    sigma(theta_2).  Pruning an already pruned neuron is a no-op.
    """
    if index == 3:
        if params.n < 3:
            return params
        weights = params.weights.copy()
        weights[2, :] = 0.0
        weights[:, 2] = 0.0
        return replace(params, weights=weights, n=2)
    if index == 2:
        if params.n == 1:
            return params
        if params.n == 3:
            raise ValueError("prune the interneuron before motor neuron 2")
        weights = params.weights.copy()
        weights[1, :] = 0.0
        weights[:, 1] = 0.0
        input_gains = params.input_gains.copy()
        input_gains[1, :] = 0.0
        return replace(params, weights=weights, input_gains=input_gains,
                       n=1, pruned_output_2=float(expit(params.biases[1])))
    raise ValueError("only neuron 3 (interneuron) or 2 (second motor) can be pruned")


def integrate(params: CtrnnParams, inputs, duration: float, dt: float = 0.1,
              state=None) -> np.ndarray:
    """Integrate the network under constant input currents.

    Returns the (n_steps + 1, 3) state trajectory including t = 0.
    """
    n_steps = int(round(duration / dt))
    inputs = np.asarray(inputs, dtype=float)
    drive = np.zeros(N_NEURONS)
    drive[:N_SENSORS] = inputs
    s = np.zeros(N_NEURONS) if state is None else np.asarray(state, dtype=float)
    out = np.empty((n_steps + 1, N_NEURONS))
    out[0] = s
    for k in range(n_steps):
        s = rk4_step(s, drive, params.weights, params.biases, params.taus, dt)
        out[k + 1] = s
    return out
