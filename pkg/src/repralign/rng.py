"""Reproducible pseudo-random numbers: xoshiro256** seeded through splitmix64.

The generator is pinned here, rather than borrowed from numpy, so that
subsamples and CV folds stay bit-identical across library upgrades.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Mix integer keys into a seed to get an independent child stream."""
    h = seed & _MASK
    for key in keys:
        _, mixed = splitmix64((key & _MASK) ^ 0x5851F42D4C957F2D)
        _, h = splitmix64(h ^ mixed)
    return h


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class Xoshiro256:
    """xoshiro256** 1.0 (Blackman & Vigna)."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be a non-negative 64-bit integer")
        sm = seed & _MASK
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def below(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` (Lemire's multiply-shift with rejection)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) - bound) % bound
        while True:
            m = self.next_u64() * bound
            if (m & _MASK) >= threshold:
                return m >> 64

    def random(self) -> float:
        """Uniform double in ``[0, 1)`` with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, population: int, size: int) -> list[int]:
        """``size`` distinct indices from ``range(population)``, in draw order.

        Partial Fisher-Yates over a virtual array; only touched slots are
        stored, so the cost is O(size) regardless of ``population``.
        """
        if not 0 <= size <= population:
            raise ValueError("size must lie in [0, population]")
        swapped: dict[int, int] = {}
        out = []
        for i in range(size):
            j = i + self.below(population - i)
            vi = swapped.get(i, i)
            vj = swapped.get(j, j)
            swapped[j] = vi
            out.append(vj)
        return out
