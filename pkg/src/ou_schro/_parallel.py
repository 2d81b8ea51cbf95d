"""Chunked, order-preserving thread parallelism.

Chunk boundaries depend only on the problem size, never on the worker count,
so results are bit-identical for any ``OU_SCHRO_THREADS`` setting.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "OU_SCHRO_THREADS"
CHUNK_ELEMENTS = 1 << 21


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def map_chunks(fn, n_items: int, chunk: int):
    """Apply ``fn(start, stop)`` over ``range(n_items)`` in fixed chunks, in order."""
    bounds = [(i, min(i + chunk, n_items)) for i in range(0, n_items, max(1, chunk))]
    workers = min(thread_count(), len(bounds))
    if workers <= 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
