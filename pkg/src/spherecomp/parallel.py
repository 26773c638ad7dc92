"""Fixed-chunk parallel map.

Work is always cut into the same chunks regardless of the worker count, and
results are reassembled in chunk order, so outputs do not depend on how many
workers ran them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

WORKERS_ENV = "SPHERECOMP_WORKERS"
CHUNK = 128


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def chunk_slices(total: int, chunk: int = CHUNK) -> list[slice]:
    return [slice(i, min(i + chunk, total)) for i in range(0, total, chunk)]


def chunked_map(fn: Callable[[slice], object], total: int, chunk: int = CHUNK) -> Sequence:
    slices = chunk_slices(total, chunk)
    workers = min(worker_count(), len(slices))
    if workers <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, slices))
