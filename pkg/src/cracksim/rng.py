"""Seed derivation and random streams.

Every random draw in the package comes from ``numpy.random.Generator``
backed by PCG64, whose raw bit stream is stable across platforms.  Only
``Generator.random`` and ``Generator.integers`` are used for draws that
feed file outputs; other distributions are built from those via inverse
CDFs so the byte stream does not depend on numpy's sampler internals.
"""

import numpy as np

MASK64 = (1 << 64) - 1
# SplitMix64 increment (golden ratio); the child-seed constant of the manifest format.
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Stream ids used by render_sample to split one sample seed into stages.
STREAM_FRACTAL = 1
STREAM_PLACEMENT = 2
STREAM_TEXTURE = 3
STREAM_LIGHT = 4


def splitmix64(x: int) -> int:
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(parent: int, index: int) -> int:
    """Derive the 64-bit seed of child ``index`` from ``parent``.

    child = splitmix64(splitmix64(parent) ^ (index * GOLDEN_GAMMA mod 2**64))
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    return splitmix64(splitmix64(parent & MASK64) ^ ((index * GOLDEN_GAMMA) & MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & MASK64))


def open_uniform(rng: np.random.Generator, size=None):
    """Uniform draws on the open interval (0, 1)."""
    u = rng.random(size)
    return np.clip(u, 2.0**-53, 1.0 - 2.0**-53)
