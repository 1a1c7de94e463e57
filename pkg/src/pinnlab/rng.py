"""Seeded random streams.

All randomness goes through numpy's Philox-4x64 counter-based generator,
keyed by ``(seed, stream)`` (plus an optional step counter folded into the
stream word for per-step draws). The bit stream is fixed by the algorithm, so a
given seed yields the same samples on every platform.
"""

import numpy as np

INIT = 1
INTERIOR = 2
BOUNDARY = 3
PCGRAD = 4
PROBE = 5

_MASK = (1 << 64) - 1


def generator(seed: int, stream: int = 0, step: int = 0) -> np.random.Generator:
    word = (int(stream) & 0xFF) | (int(step) << 8)
    key = np.array([int(seed) & _MASK, word & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
