from __future__ import annotations

import asyncio
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, else OF_THREADS, else 1."""
    if threads is not None:
        return max(1, int(threads))
    raw = os.getenv("OF_THREADS", "")
    try:
        return max(1, int(raw)) if raw.strip() else 1
    except ValueError:
        return 1


async def _gather(fn: Callable[[T], R], items: list[T], threads: int) -> list[R]:
    loop = asyncio.get_running_loop()
    executor = ThreadPoolExecutor(max_workers=threads, thread_name_prefix="of-worker")
    loop.set_default_executor(executor)
    try:
        return list(await asyncio.gather(*(asyncio.to_thread(fn, item) for item in items)))
    finally:
        executor.shutdown(wait=True)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> list[R]:
    """Map fn over items on a thread pool; results keep input order.

    numpy and scipy release the GIL in the heavy kernels, so threads are
    enough for the grid scans. One thread runs inline.
    """
    work = list(items)
    n = resolve_threads(threads)
    if n <= 1 or len(work) <= 1:
        return [fn(item) for item in work]
    return asyncio.run(_gather(fn, work, min(n, len(work))))
