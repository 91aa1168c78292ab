"""Order-preserving parallel map, capped by the ``NGB_THREADS`` environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "NGB_THREADS"


def max_workers(requested: int | None = None) -> int:
    cap = os.environ.get(ENV_VAR)
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        try:
            n = min(n, max(int(cap), 1))
        except ValueError:
            pass
    return max(int(n), 1)


def pmap(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None, chunksize: int = 64) -> list[R]:
    """``list(map(fn, items))``, spread over processes when more than one worker is allowed."""
    items = list(items)
    n = max_workers(workers)
    if n == 1 or len(items) < 2 * chunksize:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items, chunksize=chunksize))
