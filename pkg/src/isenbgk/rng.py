"""Deterministic pseudo-random numbers via the splitmix64 generator.

The generator is pinned to its published constants so that any
implementation seeded the same way reproduces the same stream, which keeps
the randomized verification checks reproducible across platforms.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 stream yielding uniform doubles in [0, 1)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        # 53 significant bits, as in the reference double conversion
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(n)])

    def symmetric(self, n: int) -> np.ndarray:
        """n uniform samples in (-1, 1)."""
        return 2.0 * self.uniforms(n) - 1.0
