"""Seeding for every stochastic operation.

Random streams come from the Philox4x64-10 counter-based generator
(Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011),
keyed directly by a 64-bit seed.  Child seeds are derived with the
SplitMix64 output function, so ``split(seed, i)`` is the (i+1)-th
SplitMix64 output for state ``seed``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def split(seed: int, index: int) -> int:
    """Derive an independent child seed for stream ``index``."""
    seed = check_seed(seed)
    if index < 0:
        raise ValueError("stream index must be non-negative")
    return _mix64((seed + (index + 1) * _GOLDEN_GAMMA) & MASK64)


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=check_seed(seed)))
