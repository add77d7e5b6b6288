"""Evolved acoustically coupled agents and tools to probe their dynamics.

The package has three layers:

* simulation: `ctrnn` (controllers), `arena` (bodies, sound,
  collisions), `engine` and `trial` (batched trial stepping and
  fitness);
* search: `evolution` (genetic algorithm with a neuron pruning ladder);
* analysis: `tsa` (delay embedding, false nearest neighbours, largest
  Lyapunov exponent, determinism score) plus `systems` with canonical
  series to validate the detectors against;
* orchestration: `lab` (experiment configs, file formats, figures) and
  the `duetsim` command line built on it.
"""

from .arena import BODY_RADIUS, Body, WorldState, resolve_collision, sense, sensor_intensity, shadow_distance, update_pose
from .ctrnn import CtrnnParams, derivative, integrate, logistic, motor_velocities, motor_velocity, prune_neuron, step_rk4
from .evolution import EvoConfig, EvolutionResult, decode, mutate, prune_and_reseed, prune_genome, rank_select, run_evolution
from .trial import TrialConfig, TrialRecord, evaluate_solution, rank_weighted_fitness, run_trial, sample_initial_conditions, trial_score
from .tsa import (AnalysisReport, analyze, delay_embed, determinism_test,
                  false_nearest_neighbors, largest_lyapunov,
                  mutual_information_delay)

__version__ = "0.1.0"
