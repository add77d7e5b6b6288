"""Deterministic derivation of independent random streams.

Every stochastic component draws from a generator addressed by the
master seed plus a small integer path, e.g. (mutation, generation,
slot).  Streams are independent of each other and of evaluation order,
which keeps whole runs reproducible bit for bit no matter how work is
scheduled.
"""

from __future__ import annotations

import numpy as np

SEED_SPAN = 2 ** 63


def rng_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream addressed by (master_seed, path)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.default_rng(ss)


def draw_seeds(master_seed: int, *path: int, n: int) -> list[int]:
    """n fresh integer seeds from the addressed stream."""
    return [int(v) for v in rng_stream(master_seed, *path).integers(0, SEED_SPAN, size=n)]
