"""Reproducible random streams.

Every stream is a Philox4x64 counter-based generator keyed through
``numpy.random.SeedSequence(seed, spawn_key=(label, index))``. A stream is
fully determined by the master seed, a label and an integer index, so work
items can be executed in any order (or concurrently) and still draw the
same numbers.
"""
import numpy as np

# Stream labels. Fixed integers so that streams never depend on hashing.
SAMPLE = 0
EVAL = 1
DATA = 2

_MASK64 = (1 << 64) - 1


def stream(seed: int, label: int, index: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=(int(label), int(index)))
    return np.random.Generator(np.random.Philox(seq))


def draw_direction(rng: np.random.Generator, p: int) -> np.ndarray:
    """Standard normal p-vector; an all-zero draw is rejected and redrawn."""
    while True:
        d = rng.standard_normal(p)
        if np.any(d != 0.0):
            return d
