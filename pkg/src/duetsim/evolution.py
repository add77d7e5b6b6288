"""Evolutionary search over controller genomes, with neuron pruning.

A genome is 21 genes in [-1, 1]:

    genes  0..8   connection weights, grouped by receiving neuron
                  (w11, w21, w31, w12, w22, w32, w13, w23, w33)
    genes  9..11  biases theta_1..theta_3
    genes 12..14  time constants tau_1..tau_3
    genes 15..18  input gains g[1][1], g[1][2], g[2][1], g[2][2]
    genes 19..20  motor output gains

Symmetric parameters decode linearly (weights to [-8, 8], biases to
[-3, 3], input gains to [-10, 10], output gains to [-2, 2]); time
constants map to [1, 50].

The search is a generational GA without crossover or elitism.  Parents
are chosen by linear ranking (expected offspring 1.3 for the best, 0.7
for the worst) realized through stochastic universal sampling in one
pass, and every parent is mutated: a displacement of magnitude
m ~ Normal(0, sd = sqrt(0.2)) along a uniformly random direction of the
21-sphere, clipped back into the gene box.

Networks are shrunk by pruning at the genome level: the genes tied to a
pruned neuron are pinned to 0 and masked out of mutation, and the
masked genome seeds a fresh population.  The interneuron (3) must go
before motor neuron 2, whose motor output then freezes at the constant
sigma(theta_2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .ctrnn import CtrnnParams, prune_neuron
from .engine import ParamsBatch
from .seeds import draw_seeds, rng_stream
from .trial import TrialConfig, evaluate_batch

GENOME_SIZE = 21
WEIGHT_GENES = slice(0, 9)
BIAS_GENES = slice(9, 12)
TAU_GENES = slice(12, 15)
INPUT_GAIN_GENES = slice(15, 19)
OUTPUT_GAIN_GENES = slice(19, 21)

WEIGHT_BOUND = 8.0
BIAS_BOUND = 3.0
INPUT_GAIN_BOUND = 10.0
OUTPUT_GAIN_BOUND = 2.0
TAU_MIN = 1.0
TAU_MAX = 50.0

MUTATION_SD = math.sqrt(0.2)

# weight gene index for the connection source -> target (1-based neurons)
def _w_gene(source: int, target: int) -> int:
    return (target - 1) * 3 + (source - 1)


_NEURON3_WEIGHT_GENES = sorted({_w_gene(3, t) for t in (1, 2, 3)}
                               | {_w_gene(s, 3) for s in (1, 2, 3)})
_NEURON2_WEIGHT_GENES = sorted({_w_gene(2, t) for t in (1, 2, 3)}
                               | {_w_gene(s, 2) for s in (1, 2, 3)})
_NEURON2_INPUT_GENES = [15 + 2, 15 + 3]  # g[2][1], g[2][2]

# RNG stream ids under the master seed
_STREAM_INIT = 0
_STREAM_TRIALS = 1
_STREAM_SELECT = 2
_STREAM_MUTATE = 3


def random_genome(rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, GENOME_SIZE)


def decode(genome, stage: int = 3) -> CtrnnParams:
    """Genotype to controller parameters, applying the stage's pruning."""
    g = np.asarray(genome, dtype=float)
    if g.shape != (GENOME_SIZE,):
        raise ValueError(f"genome must hold {GENOME_SIZE} genes")
    if np.any(np.abs(g) > 1.0 + 1e-12):
        raise ValueError("genes must lie in [-1, 1]")
    weights = (WEIGHT_BOUND * g[WEIGHT_GENES]).reshape(3, 3).T
    biases = BIAS_BOUND * g[BIAS_GENES]
    taus = TAU_MIN + (g[TAU_GENES] + 1.0) / 2.0 * (TAU_MAX - TAU_MIN)
    input_gains = (INPUT_GAIN_BOUND * g[INPUT_GAIN_GENES]).reshape(2, 2)
    output_gains = OUTPUT_GAIN_BOUND * g[OUTPUT_GAIN_GENES]
    params = CtrnnParams(weights, biases, taus, input_gains, output_gains)
    if stage <= 2:
        params = prune_neuron(params, 3)
    if stage == 1:
        params = prune_neuron(params, 2)
    return params


def decode_batch(genomes, stage: int = 3) -> ParamsBatch:
    """Vectorized decode of a (P, 21) genome array."""
    g = np.asarray(genomes, dtype=float)
    if np.any(np.abs(g) > 1.0 + 1e-12):
        raise ValueError("genes must lie in [-1, 1]")
    weights = (WEIGHT_BOUND * g[:, WEIGHT_GENES]).reshape(-1, 3, 3).transpose(0, 2, 1)
    biases = BIAS_BOUND * g[:, BIAS_GENES]
    taus = TAU_MIN + (g[:, TAU_GENES] + 1.0) / 2.0 * (TAU_MAX - TAU_MIN)
    input_gains = (INPUT_GAIN_BOUND * g[:, INPUT_GAIN_GENES]).reshape(-1, 2, 2)
    output_gains = OUTPUT_GAIN_BOUND * g[:, OUTPUT_GAIN_GENES]
    n = len(g)
    if stage <= 2:
        weights[:, 2, :] = 0.0
        weights[:, :, 2] = 0.0
    pruned2 = np.zeros(n, dtype=bool)
    pruned2_value = np.zeros(n)
    if stage == 1:
        weights[:, 1, :] = 0.0
        weights[:, :, 1] = 0.0
        input_gains[:, 1, :] = 0.0
        pruned2[:] = True
        pruned2_value = expit(biases[:, 1])
    return ParamsBatch(weights, biases, taus, input_gains, output_gains,
                       pruned2, pruned2_value)


def mutable_gene_mask(stage: int = 3) -> np.ndarray:
    """True for genes the mutation operator may move at this stage."""
    mask = np.ones(GENOME_SIZE, dtype=bool)
    if stage <= 2:
        mask[_NEURON3_WEIGHT_GENES] = False
    if stage == 1:
        mask[_NEURON2_WEIGHT_GENES] = False
        mask[_NEURON2_INPUT_GENES] = False
    return mask


def prune_genome(genome, to_stage: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero the genes of the pruned neurons; also return the gene mask."""
    if to_stage not in (2, 1):
        raise ValueError("can only prune to stage 2 or 1")
    g = np.asarray(genome, dtype=float).copy()
    mask = mutable_gene_mask(to_stage)
    g[~mask] = 0.0
    return g, mask


def mutate(parent, rng: np.random.Generator, mask=None,
           sd: float = MUTATION_SD) -> np.ndarray:
    """One mutated offspring of `parent`.

    The displacement is m * u with u uniform on the unit 21-sphere and
    m ~ Normal(0, sd); genes are clipped back into [-1, 1] and masked
    genes are re-pinned to 0 afterwards.
    """
    direction = rng.standard_normal(GENOME_SIZE)
    direction /= np.sqrt(np.sum(direction * direction))
    magnitude = rng.normal(0.0, sd)
    child = np.clip(np.asarray(parent, dtype=float) + magnitude * direction,
                    -1.0, 1.0)
    if mask is not None:
        child[~mask] = 0.0
    return child


def rank_expected_counts(n: int, pressure: float = 1.3) -> np.ndarray:
    """Expected offspring per fitness rank (rank 0 = best), summing to n."""
    ranks = np.arange(n)
    return pressure - (2.0 * pressure - 2.0) * ranks / (n - 1)


def rank_select(fitnesses, rng: np.random.Generator,
                pressure: float = 1.3) -> np.ndarray:
    """Draw a full parent set by stochastic universal sampling.

    Individuals are ranked by fitness (ties broken by index), given the
    linear expected counts, and sampled with a single equally spaced
    comb, so every realized count is within 1 of its expectation.

    Returns:
        (n,) array of parent indices into `fitnesses`.
    """
    f = np.asarray(fitnesses, dtype=float)
    n = len(f)
    order = np.lexsort((np.arange(n), -f))  # best first
    cum = np.cumsum(rank_expected_counts(n, pressure))
    pointers = rng.uniform(0.0, 1.0) + np.arange(n)
    ranks = np.minimum(np.searchsorted(cum, pointers, side="right"), n - 1)
    return order[ranks]


@dataclass(frozen=True)
class EvoConfig:
    population: int = 100
    max_generations: int = 500
    trials: int = 10
    pressure: float = 1.3
    mutation_sd: float = MUTATION_SD
    fitness_stop: float | None = None
    plateau_window: int = 100
    plateau_epsilon: float = 1e-4
    workers: int = 1


@dataclass
class EvolutionResult:
    """Per-generation statistics and the best genome seen in the run."""

    stage: int
    master_seed: int
    stop_reason: str
    generations: np.ndarray
    best: np.ndarray
    mean: np.ndarray
    median: np.ndarray
    best_so_far: np.ndarray
    best_genome: np.ndarray
    best_fitness: float
    best_generation: int
    final_population: np.ndarray = field(repr=False, default=None)


def run_evolution(master_seed: int, evo: EvoConfig | None = None,
                  trial_template: TrialConfig | None = None, stage: int = 3,
                  seed_genome=None, on_generation=None) -> EvolutionResult:
    """Evolve a population of controllers at the given pruning stage.

    A fresh set of `evo.trials` trial seeds is drawn every generation
    and shared by the whole population.  Stopping: the configured
    fitness threshold, a plateau (no best-so-far improvement beyond
    `plateau_epsilon` for `plateau_window` generations), or the
    generation cap, whichever comes first.

    Args:
        seed_genome: start from mutants of this genome instead of a
            uniform random population (used after pruning).
        on_generation: optional callback (generation, best, mean, median).
    """
    evo = evo or EvoConfig()
    trial_template = trial_template or TrialConfig()
    mask = mutable_gene_mask(stage)
    p = evo.population

    if seed_genome is None:
        pop = rng_stream(master_seed, _STREAM_INIT).uniform(-1.0, 1.0, (p, GENOME_SIZE))
        pop[:, ~mask] = 0.0
    else:
        seed_genome = np.asarray(seed_genome, dtype=float)
        pop = np.empty((p, GENOME_SIZE))
        pop[0] = np.where(mask, seed_genome, 0.0)
        for slot in range(1, p):
            pop[slot] = mutate(seed_genome, rng_stream(master_seed, _STREAM_INIT, slot),
                               mask, evo.mutation_sd)

    gens, best_arr, mean_arr, median_arr, bsf_arr = [], [], [], [], []
    best_fitness = -np.inf
    best_genome = pop[0].copy()
    best_generation = 0
    plateau_ref = -np.inf
    last_improvement = 0
    stop_reason = "max_generations"

    for gen in range(evo.max_generations + 1):
        trial_seeds = draw_seeds(master_seed, _STREAM_TRIALS, gen, n=evo.trials)
        fitness, _ = evaluate_batch(decode_batch(pop, stage), trial_seeds,
                                    trial_template, workers=evo.workers)
        idx = int(np.argmax(fitness))
        if fitness[idx] > best_fitness:
            best_fitness = float(fitness[idx])
            best_genome = pop[idx].copy()
            best_generation = gen
        gens.append(gen)
        best_arr.append(float(fitness[idx]))
        mean_arr.append(float(np.mean(fitness)))
        median_arr.append(float(np.median(fitness)))
        bsf_arr.append(best_fitness)
        if on_generation is not None:
            on_generation(gen, best_arr[-1], mean_arr[-1], median_arr[-1])

        if best_fitness > plateau_ref + evo.plateau_epsilon:
            plateau_ref = best_fitness
            last_improvement = gen
        if evo.fitness_stop is not None and best_arr[-1] >= evo.fitness_stop:
            stop_reason = "threshold"
            break
        if gen - last_improvement >= evo.plateau_window:
            stop_reason = "plateau"
            break
        if gen == evo.max_generations:
            break

        parents = rank_select(fitness, rng_stream(master_seed, _STREAM_SELECT, gen),
                              evo.pressure)
        pop = np.stack([
            mutate(pop[j], rng_stream(master_seed, _STREAM_MUTATE, gen, slot),
                   mask, evo.mutation_sd)
            for slot, j in enumerate(parents)
        ])

    return EvolutionResult(
        stage=stage, master_seed=int(master_seed), stop_reason=stop_reason,
        generations=np.array(gens), best=np.array(best_arr),
        mean=np.array(mean_arr), median=np.array(median_arr),
        best_so_far=np.array(bsf_arr), best_genome=best_genome,
        best_fitness=best_fitness, best_generation=best_generation,
        final_population=pop)


def prune_and_reseed(best_genome, from_stage: int, master_seed: int,
                     evo: EvoConfig | None = None,
                     trial_template: TrialConfig | None = None,
                     on_generation=None) -> EvolutionResult:
    """Prune the next neuron off a solution and re-evolve around it.

    Stage order is enforced: a 3-neuron solution loses its interneuron
    first (to stage 2), a 2-neuron solution loses motor neuron 2 (to
    stage 1).
    """
    if from_stage not in (3, 2):
        raise ValueError("pruning ladder runs 3 -> 2 -> 1")
    to_stage = from_stage - 1
    pruned, _ = prune_genome(best_genome, to_stage)
    return run_evolution(master_seed, evo, trial_template, stage=to_stage,
                         seed_genome=pruned, on_generation=on_generation)
