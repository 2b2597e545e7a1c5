"""Process pool plumbing for the pair sweeps and the Monte Carlo loop.

Workers return exact integers; callers combine them by addition, so the
result never depends on the worker count or completion order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_threads(threads) -> int:
    if threads in (None, "AUTO", "auto", 0):
        return os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValueError("threads must be a positive integer or AUTO")
    return threads


def pmap(func, items, threads=1, initializer=None, initargs=()):
    """Ordered map; runs inline when one worker is requested."""
    items = list(items)
    threads = min(resolve_threads(threads), max(1, len(items)))
    if threads == 1:
        if initializer is not None:
            initializer(*initargs)
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads, initializer=initializer, initargs=initargs) as ex:
        return list(ex.map(func, items, chunksize=max(1, len(items) // (4 * threads))))
