"""Deterministic random number generation.

A single fully specified generator (xoshiro256** over a splitmix64-seeded
state) backs every random choice in the package, so runs reproduce
bit-for-bit on any platform and any thread count.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state, returning (output, new_state)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def stable_key(text: str) -> int:
    """Platform-independent 64-bit key for a string (FNV-1a)."""
    key = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        key = ((key ^ byte) * 0x100000001B3) & _MASK
    return key


class Rng:
    """xoshiro256** generator seeded via splitmix64.

    The raw stream is the reference xoshiro256** sequence; all derived
    draws (uniforms, normals, permutations) consume it front to back.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        state = self.seed
        words = []
        for _ in range(4):
            out, state = _splitmix64(state)
            words.append(out)
        self._s = words

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

    def _raw(self, n: int) -> list[int]:
        # Hot path: keep the state in locals while looping.
        s0, s1, s2, s3 = self._s
        out = []
        append = out.append
        for _ in range(n):
            append((_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK)
            t = (s1 << 17) & _MASK
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return out

    def uniform(self) -> float:
        """One float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniforms(self, n: int) -> np.ndarray:
        """n floats in [0, 1), as float64."""
        raw = np.array(self._raw(n), dtype=np.uint64) if n else np.empty(0, np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller, as float64."""
        pairs = (n + 1) // 2
        raw = np.array(self._raw(2 * pairs), dtype=np.uint64)
        bits = (raw >> np.uint64(11)).astype(np.float64)
        u1 = (bits[0::2] + 1.0) * 2.0**-53  # in (0, 1], safe for log
        u2 = bits[1::2] * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * math.pi * u2
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n]

    def normal_matrix(self, rows: int, cols: int, std: float = 1.0) -> np.ndarray:
        return (self.normals(rows * cols) * std).reshape(rows, cols)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n). Modulo bias is ~n/2^64."""
        idx = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx

    def randint(self, bound: int) -> int:
        """Integer in [0, bound)."""
        return self.next_u64() % bound

    def child(self, *keys: int) -> "Rng":
        """Independent generator derived from this one's seed and keys.

        Depends only on the original seed, never on how much of the parent
        stream was consumed, so per-item children are stable under any
        scheduling order.
        """
        state = self.seed
        for key in keys:
            out, state = _splitmix64(state ^ (key & _MASK))
            state = out
        out, _ = _splitmix64(state)
        return Rng(out)
