"""Ordered parallel map with a thread cap taken from ``FSMAC_THREADS``.

Results are always returned in input order and every work unit receives its
own pre-assigned seed, so outputs do not depend on the schedule.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get("FSMAC_THREADS", "")
    try:
        k = int(raw)
    except ValueError:
        k = os.cpu_count() or 1
    return max(1, k)


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    k = min(thread_count(), len(items))
    if k <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def spawn_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(seed)).spawn(count)


def chunks(total: int, size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]
