"""Deterministic random-stream derivation.

Every stream in the package is a Philox (counter-based) generator keyed by
``(master_seed, purpose label, index_a, index_b)`` through numpy's
``SeedSequence`` hash. Distinct keys yield statistically independent streams,
so results are bit-stable regardless of the order in which streams are
created or consumed, and simulations can fan out across workers without
changing output.
"""

import numpy as np

# Purpose labels. Fixed values; never renumber, or every seeded result moves.
WORLD = 1
EDITORIAL = 2
SESSION = 3
SAMPLER = 4
INIT = 5
SHUFFLE = 6
RUN = 7
PLANT = 8
TRAIN = 9

_KIND_CODES = {"tweedie": 11, "logloss": 12, "weighted": 13, "mse": 14}


def _entropy(master_seed, label, index_a, index_b):
    seed = int(master_seed)
    if seed < 0:
        raise ValueError(f"master seed must be nonnegative, got {seed}")
    return (seed, int(label), int(index_a), int(index_b))


def stream(master_seed, label, index_a=0, index_b=0):
    """Return a fresh Generator for the given seed and purpose path."""
    ss = np.random.SeedSequence(_entropy(master_seed, label, index_a, index_b))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(master_seed, label, index_a=0, index_b=0):
    """Collapse a purpose path to a plain integer seed for sub-components."""
    ss = np.random.SeedSequence(_entropy(master_seed, label, index_a, index_b))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def kind_code(name):
    """Stable integer code for a loss-kind name, for seed derivation."""
    try:
        return _KIND_CODES[name]
    except KeyError:
        raise ValueError(f"unknown loss kind name: {name!r}") from None
