"""Seed derivation. Every random stream is keyed by (master seed, purpose, ...)."""
import numpy as np

BICRITERIA = 1
SAMPLING = 2
STREAM = 3
EVALUATION = 4
GENERATION = 5
REFERENCE = 6


def derive_rng(seed, *keys) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
