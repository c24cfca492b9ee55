"""Deterministic 64-bit PRNG: SplitMix64 seeding a xoshiro256** stream.

The generators are specified by algorithm, not by library, so that an
independent implementation following the same recipe reproduces every stream
bit for bit:

* ``splitmix64`` advances its state by the golden-gamma constant
  ``0x9E3779B97F4A7C15`` and outputs the new state passed through the
  finalizer ``z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27;
  z *= 0x94D049BB133111EB; z ^= z>>31`` (all arithmetic mod 2**64).
* :class:`Xoshiro256StarStar` seeds its four state words with the first four
  SplitMix64 outputs of the seed; each step returns
  ``rotl(s1 * 5, 7) * 9`` and applies the reference xoshiro256** transition.
* Floats in [0, 1) take the top 53 bits: ``(u64 >> 11) * 2**-53``.
* Bounded integers use rejection sampling (retry while
  ``u >= (2**64 // n) * n``, then ``u % n``) so there is no modulo bias.
* Sub-stream and per-sample seeds come from :func:`derive_seed`, the
  SplitMix64 step applied to ``seed XOR index``.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step. Returns ``(next_state, output)``."""
    state = (state + _GAMMA) & _MASK64
    return state, _mix(state)


def derive_seed(seed: int, index: int) -> int:
    """Derive a child seed from a parent seed and an index.

    Defined as the SplitMix64 output for state ``seed XOR index``; used for
    per-sample masks, sub-streams, and corpus items.
    """
    return splitmix64((seed ^ index) & _MASK64)[1]


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** stream seeded via SplitMix64."""

    __slots__ = ("_s",)

    def __init__(self, seed: int):
        state = seed & _MASK64
        words = []
        for _ in range(4):
            state, out = splitmix64(state)
            words.append(out)
        self._s = words

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def next_float(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def next_below(self, n: int) -> int:
        """Unbiased uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"next_below needs n >= 1, got {n}")
        limit = ((1 << 64) // n) * n
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()

    def uniform_array(self, shape, low: float, high: float) -> np.ndarray:
        """Array of uniforms drawn in C order (row-major fill)."""
        size = int(np.prod(shape))
        span = high - low
        vals = [low + span * self.next_float() for _ in range(size)]
        return np.array(vals, dtype=np.float64).reshape(shape)
