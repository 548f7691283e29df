"""Counter-based SplitMix64 generator.

The k-th raw output (k = 1, 2, ...) of a stream seeded with ``s`` is::

    z = s + k * 0x9E3779B97F4A7C15            (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

which is exactly the classic sequential SplitMix64 sequence, but computable
for a whole block of counters at once with unsigned 64-bit numpy arithmetic.
Uniform doubles are the top 53 bits scaled by 2**-53. Standard normals use the
Box-Muller transform on consecutive uniform pairs ``(u1, u2)``:
``r = sqrt(-2 log(1 - u1))``, giving ``r cos(2 pi u2)`` then ``r sin(2 pi u2)``.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class Prng:
    """Seeded stream of 64-bit words. Not thread safe; give each thread its own."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        self.counter = 0

    def __repr__(self):
        return f"Prng(seed={self.seed}, counter={self.counter})"

    def raw(self, n: int) -> np.ndarray:
        k = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return mix64(np.uint64(self.seed) + k * GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` doubles in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        u1, u2 = 1.0 - u[0::2], u[1::2]
        r = np.sqrt(-2.0 * np.log(u1))
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(2.0 * np.pi * u2)
        out[1::2] = r * np.sin(2.0 * np.pi * u2)
        return out[:n]

    def permutation(self, n: int) -> np.ndarray:
        # stable argsort over random words; ties are astronomically unlikely
        return np.argsort(self.raw(n), kind="stable")

    def child(self, key: int) -> "Prng":
        """Independent stream derived from this seed and an integer key."""
        with np.errstate(over="ignore"):
            s = mix64(np.uint64(self.seed) ^ mix64(np.uint64(key & _MASK) + GOLDEN))
        return Prng(int(s))
