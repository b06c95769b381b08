"""Deterministic 64-bit PRNG used by the synthetic corpus generator.

Counter-based SplitMix64: the state advances by the golden-ratio increment
and each output is an xorshift-multiply mix of the new state,

    state'   = (state + 0x9E3779B97F4A7C15) mod 2**64
    z        = state'
    z        = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   mod 2**64
    z        = (z ^ (z >> 27)) * 0x94D049BB133111EB   mod 2**64
    output   = z ^ (z >> 31)

The counter form makes bulk draws vectorizable (numpy uint64) while staying
bit-identical to the sequential path; corpora regenerated from the same seed
are therefore byte-identical.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class Rng:
    """Sequential stream over the documented recurrence."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _mix(self._state)

    def uniform(self) -> float:
        """Float in [0, 1): top 53 bits of the next output, times 2**-53."""
        return (self.next64() >> 11) * 2.0**-53

    def randbelow(self, n: int) -> int:
        """Integer in [0, n): floor(uniform() * n)."""
        return int(self.uniform() * n)

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]

    def block(self, n: int) -> np.ndarray:
        """The next n outputs as uint64, identical to n next64() calls."""
        with np.errstate(over="ignore"):
            counters = np.arange(1, n + 1, dtype=np.uint64)
            z = np.uint64(self._state) + counters * np.uint64(_GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        self._state = (self._state + n * _GOLDEN) & _MASK
        return z

    def byte_block(self, n: int) -> np.ndarray:
        """n pseudo-random bytes (uint8), 8 per underlying output."""
        words = self.block((n + 7) // 8)
        return words.view(np.uint8)[:n].copy()
