"""Batch-means error bars."""

from __future__ import annotations

import math
from typing import Sequence, Tuple

import numpy as np

__all__ = ["DEFAULT_BATCHES", "batch_means", "pooled_batch_means"]

DEFAULT_BATCHES = 32


def _batch_averages(x: np.ndarray, batches: int) -> np.ndarray:
    b = min(batches, x.size)
    size = x.size // b
    # drop the remainder at the front so the most recent samples are kept
    trimmed = x[x.size - b * size:]
    return trimmed.reshape(b, size).mean(axis=1)


def batch_means(x: Sequence[float], batches: int = DEFAULT_BATCHES) -> Tuple[float, float]:
    """Sample mean and batch-means standard error of a correlated series."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty series")
    if x.size == 1:
        return float(x[0]), math.inf
    avg = _batch_averages(x, batches)
    return float(x.mean()), float(avg.std(ddof=1) / math.sqrt(avg.size))


def pooled_batch_means(series: Sequence[Sequence[float]], batches: int = DEFAULT_BATCHES) -> Tuple[float, float]:
    """Combine independent chains: mean of chain means, SE from their batch SEs."""
    stats = [batch_means(s, batches) for s in series]
    k = len(stats)
    if k == 0:
        raise ValueError("no chains")
    mean = sum(m for m, _ in stats) / k
    se = math.sqrt(sum(s * s for _, s in stats)) / k
    return mean, se
