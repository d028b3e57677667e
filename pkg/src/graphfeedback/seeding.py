"""Seed derivation and generator construction shared by the harness and the verifier.

``derive_seed(m, i)`` is the ``(i+1)``-th output of SplitMix64 started at state
``m``.  Generators are numpy's counter-based Philox keyed directly by such a
64-bit seed, so a port using the same two primitives reproduces every stream.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master: int, index: int) -> int:
    """``(index+1)``-th SplitMix64 output for state ``master`` (all arithmetic mod 2^64)."""
    z = (int(master) + _GOLDEN * (int(index) + 1)) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))
