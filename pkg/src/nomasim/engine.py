"""Chunked trial execution.

Trials are split into fixed-size chunks; each chunk reads its own counter
window of the stream, so results never depend on the worker count. Chunk
results are integer arrays and are merged by addition in chunk order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

DEFAULT_CHUNK = 1 << 15


def chunk_ranges(n_trials: int, chunk: int = DEFAULT_CHUNK) -> list[tuple[int, int]]:
    if n_trials < 0 or chunk < 1:
        raise ValueError("n_trials must be >= 0 and chunk >= 1")
    return [(start, min(chunk, n_trials - start)) for start in range(0, n_trials, chunk)]


def map_chunks(fn: Callable[[int, int], np.ndarray], n_trials: int, workers: int = 1,
               chunk: int = DEFAULT_CHUNK) -> list[np.ndarray]:
    """Apply ``fn(first, count)`` to every chunk, results in chunk order."""
    ranges = chunk_ranges(n_trials, chunk)
    if workers <= 1 or len(ranges) <= 1:
        return [fn(first, count) for first, count in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def sum_chunks(fn: Callable[[int, int], np.ndarray], n_trials: int, workers: int = 1,
               chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    parts = map_chunks(fn, n_trials, workers, chunk)
    total = parts[0].copy()
    for p in parts[1:]:
        total += p
    return total
