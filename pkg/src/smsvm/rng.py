"""Portable seedable random numbers.

xoshiro256** seeded through splitmix64, with Box-Muller normals. Every value
is produced by integer arithmetic plus ``math.log``/``math.sqrt``/``math.cos``
/``math.sin``, so a given seed yields the same stream on every platform.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_TWO_PI = 2.0 * math.pi


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *tags: int) -> int:
    """Mix a base seed with integer tags into a new 64-bit seed."""
    state = seed & _MASK
    _, out = splitmix64(state)
    for tag in tags:
        state, out = splitmix64(out ^ (tag & _MASK))
    return out


class Xoshiro256:
    """xoshiro256** generator (Blackman & Vigna)."""

    def __init__(self, seed: int):
        if seed < 0 or seed > _MASK:
            raise ValueError("seed must be a 64-bit unsigned integer")
        sm = seed
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s
        self._spare: float | None = None

    @classmethod
    def from_state(cls, state: list[int]) -> "Xoshiro256":
        """Build a generator from a raw 4-word state (mainly for test vectors)."""
        if len(state) != 4 or not any(state):
            raise ValueError("state must be four 64-bit words, not all zero")
        g = cls(0)
        g._s = [int(v) & _MASK for v in state]
        return g

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        r = ((s1 * 5) & _MASK)
        r = (((r << 7) | (r >> 57)) & _MASK) * 9 & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        self._s = [s0, s1, s2, s3]
        return r

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) (Lemire's multiply-shift with rejection)."""
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = ((1 << 64) - n) % n
        while True:
            prod = self.next_u64() * n
            if (prod & _MASK) >= threshold:
                return prod >> 64

    def normal(self) -> float:
        """Standard normal deviate by the Box-Muller transform."""
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = _TWO_PI * u2
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)

    def normals(self, n: int) -> np.ndarray:
        normal = self.normal
        return np.array([normal() for _ in range(n)], dtype=np.float64)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        p = list(range(n))
        below = self.below
        for i in range(n - 1, 0, -1):
            j = below(i + 1)
            p[i], p[j] = p[j], p[i]
        return np.array(p, dtype=np.int64)
