"""Thread fan-out over independent chunks; ``SWALLOWTAIL_THREADS`` caps the pool."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "SWALLOWTAIL_THREADS"


def worker_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(ENV_VAR, "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {env!r}") from None
    return max(1, min(4, os.cpu_count() or 1))


def map_chunks(fn, chunks: list, threads: int | None = None) -> list:
    """``[fn(c) for c in chunks]``, in order, on up to ``worker_count`` threads."""
    workers = worker_count(threads)
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, chunks))
    return [fn(c) for c in chunks]
