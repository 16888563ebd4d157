"""Упорядоченный параллельный map на потоках."""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None) -> int:
    """None или 0 -> число ядер машины."""
    if not threads:
        return os.cpu_count() or 1
    return max(1, int(threads))


def thread_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = 1) -> list[R]:
    """Результаты в порядке items, независимо от расписания потоков."""
    items = list(items)
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
