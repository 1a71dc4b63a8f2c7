"""Deterministic worker pool for data-parallel raster stages.

Kernels receive disjoint row ranges and write disjoint output rows while
reading shared immutable inputs, so results are bit-identical no matter how
many workers run or how rows are split.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

from .errors import ParameterError


def resolve_threads(threads: int) -> int:
    """Map the user-facing thread knob (0 = auto) to a concrete count."""
    if threads < 0:
        raise ParameterError(f"threads must be >= 0, got {threads}")
    if threads == 0:
        return os.cpu_count() or 1
    return threads


class WorkerPool:
    """Runs row-strip kernels and independent tasks on a fixed thread count."""

    def __init__(self, threads: int = 0):
        self.workers = resolve_threads(threads)
        self._executor = ThreadPoolExecutor(self.workers) if self.workers > 1 else None

    def run_rows(self, kernel: Callable[[int, int], None], height: int) -> None:
        """Invoke kernel(row_start, row_stop) over a partition of [0, height)."""
        if self._executor is None or height < 2 * self.workers:
            kernel(0, height)
            return
        strips = self.workers
        bounds = [height * i // strips for i in range(strips + 1)]
        futures = [
            self._executor.submit(kernel, bounds[i], bounds[i + 1])
            for i in range(strips)
            if bounds[i] < bounds[i + 1]
        ]
        for f in futures:
            f.result()

    def run_tasks(self, tasks: Iterable[Callable[[], None]]) -> None:
        """Run independent nullary tasks, in parallel when workers allow."""
        tasks = list(tasks)
        if self._executor is None or len(tasks) < 2:
            for t in tasks:
                t()
            return
        futures = [self._executor.submit(t) for t in tasks]
        for f in futures:
            f.result()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
