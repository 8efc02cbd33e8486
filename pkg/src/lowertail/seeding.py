"""Deterministic random streams.

Stream rule: a 64-bit master seed and a (tag, chain, grid) triple map to
``SeedSequence(master, spawn_key=(crc32(tag), chain, grid))`` feeding a
Philox counter-based bit generator. Streams for different triples are
statistically independent and do not depend on execution order.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["MASK64", "stream", "tag_key"]

MASK64 = (1 << 64) - 1


def tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def stream(seed: int, tag: str, chain: int = 0, grid: int = 0) -> np.random.Generator:
    """Generator for (seed, module tag, chain index, grid index)."""
    if seed is None:
        raise ValueError("a seed is required for reproducible streams")
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=(tag_key(tag), int(chain), int(grid)))
    return np.random.Generator(np.random.Philox(ss))
