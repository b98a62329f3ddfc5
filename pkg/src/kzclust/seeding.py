"""Deterministic 64-bit seed derivation for independent random substreams."""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a python int (mod 2^64)."""
    x &= MASK64
    x ^= x >> 30
    x = (x * _M1) & MASK64
    x ^= x >> 27
    x = (x * _M2) & MASK64
    x ^= x >> 31
    return x


def mix64_array(x: np.ndarray) -> np.ndarray:
    """Vectorized SplitMix64 finalizer over a uint64 array."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= np.uint64(_M1)
    x ^= x >> np.uint64(27)
    x *= np.uint64(_M2)
    x ^= x >> np.uint64(31)
    return x


def derive_seed(seed: int, *tags: int | str) -> int:
    """Derive a child seed from a master seed and a tag path.

    Counter-based: each tag advances the state by a golden-ratio step and
    mixes in the tag, so siblings are statistically independent streams.
    """
    x = seed & MASK64
    for tag in tags:
        if isinstance(tag, str):
            t = int.from_bytes(tag.encode("utf-8")[:8].ljust(8, b"\0"), "little")
        else:
            t = int(tag) & MASK64
        x = mix64((x + GOLDEN) & MASK64)
        x = mix64(x ^ t)
    return x
