"""Order-preserving process-pool map driven by ``BH_THREADS``."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def worker_count(workers: int | None = None) -> int:
    """Resolve the number of workers; ``BH_THREADS`` wins over the CPU count."""
    if workers is None:
        env = os.environ.get("BH_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def parallel_map(func, items, workers: int | None = None) -> list:
    """``[func(x) for x in items]``, spread over processes when ``workers > 1``.

    Results come back in input order, so any reduction over them is
    independent of the worker count.
    """
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
