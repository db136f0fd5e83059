"""Deterministic RNG substreams.

Every source of randomness in the package is a PCG64 generator derived from
an integer master seed plus a path of integers: a domain tag and any indices
(tree number, run number, ...). Two different paths never collide, so
parallel workers can derive their own streams without coordination and a run
is reproducible from its master seed alone.
"""

from __future__ import annotations

import numpy as np

# Domain tags. Frozen: changing them changes every derived stream.
TREE = 1          # tree structure draws (attributes, thresholds)
TRAIN_THETA = 2   # uniform theta for empty leaves at training time
DP_NOISE = 3      # Laplace noise for leaf counters
DP_FALLBACK = 4   # uniform theta when perturbed counts are unusable
PROB_VOTE = 5     # coin tosses of the probabilistic rule
SPLIT = 6         # dataset shuffling
CELL = 7          # per-(run, h, k) forest seeds in grid sweeps
DATAGEN = 8       # synthetic dataset generators


def substream(*path: int) -> np.random.Generator:
    """Return the generator identified by ``path`` (master seed first)."""
    if not path:
        raise ValueError("substream path must not be empty")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(path))))


def spawn_seed(*path: int) -> int:
    """Derive a child master seed, for handing a whole seed to a sub-task."""
    return int(np.random.SeedSequence(list(path)).generate_state(1, np.uint64)[0])
