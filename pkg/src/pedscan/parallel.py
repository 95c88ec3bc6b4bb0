"""Execution patterns shared by every kernel in the package.

Three patterns cover all of the data-parallel work:

* :func:`parallel_for_2d` -- elementwise map over a 2-D grid (stencils, one
  task per block histogram, one task per row of windows).
* :func:`scatter_accumulate` -- integer scatter into histogram bins, the
  CPU stand-in for atomic adds.
* :func:`group_strided_reduce` -- lane-group strided sum with a fixed
  shuffle-down tree, the stand-in for a warp reduction.

Work is split into contiguous row bands and handed to a thread pool; numpy
releases the GIL inside its loops, so vectorised bodies do run concurrently.
Results never depend on the worker count: row bands own disjoint outputs,
integer merges commute, and float reductions follow a fixed lane order.
"""

from __future__ import annotations

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

WORKERS_ENV = "PEDSCAN_WORKERS"


@dataclass(frozen=True)
class ExecConfig:
    workers: int = 1
    group_width: int = 32

    def __post_init__(self):
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        gw = int(self.group_width)
        if gw < 1 or gw & (gw - 1):
            raise ValueError(f"group_width must be a power of two, got {self.group_width}")

    @classmethod
    def from_env(cls, workers: int | None = None, group_width: int = 32) -> "ExecConfig":
        """Explicit ``workers`` wins over the ``PEDSCAN_WORKERS`` variable."""
        if workers is None:
            raw = os.environ.get(WORKERS_ENV)
            workers = int(raw) if raw else 1
        return cls(workers=workers, group_width=group_width)


DEFAULT_CONFIG = ExecConfig()


def _bands(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(n, parts))
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_tasks(tasks: list[Callable[[], object]], workers: int) -> list:
    """Run zero-argument callables, returning their results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        futures = [pool.submit(t) for t in tasks]
        return [f.result() for f in futures]


def parallel_for_2d(height: int, width: int, body: Callable, config: ExecConfig | None = None,
                    *, tiled: bool = False) -> None:
    """Execute ``body`` once for every cell of a ``height`` x ``width`` grid.

    With ``tiled=False`` the body is called as ``body(y, x)``. With
    ``tiled=True`` it is called as ``body(rows, cols)`` with two ``slice``
    objects; the tiles partition the grid, so a vectorised body still
    touches every cell exactly once.

    The body must only write locations owned by the cells it was given.
    """
    config = config or DEFAULT_CONFIG
    if height <= 0 or width <= 0:
        return
    cols = slice(0, width)

    def make(y0, y1):
        if tiled:
            return lambda: body(slice(y0, y1), cols)

        def loop():
            for y in range(y0, y1):
                for x in range(width):
                    body(y, x)
        return loop

    # a few bands per worker smooths out uneven rows
    parts = 1 if config.workers == 1 else config.workers * 4
    run_tasks([make(a, b) for a, b in _bands(height, parts)], config.workers)


def scatter_accumulate(items, key_of: Callable | None, counters: np.ndarray,
                       config: ExecConfig | None = None) -> np.ndarray:
    """Add 1 to ``counters.flat[key_of(item)]`` for every item.

    ``key_of`` is applied to 1-D chunks of ``items`` and must return integer
    flat bin addresses of the same length; ``None`` means the items already
    are addresses. Each worker counts its chunk privately and merges into
    ``counters`` under a lock, so the totals are exact for any interleaving.
    ``counters`` is updated in place and returned.
    """
    config = config or DEFAULT_CONFIG
    if not np.issubdtype(counters.dtype, np.integer):
        raise TypeError(f"counters must be an integer array, got {counters.dtype}")
    items = np.asarray(items).ravel()
    flat = counters.reshape(-1)
    if not np.shares_memory(flat, counters):
        raise ValueError("counters must be contiguous")
    n_bins = flat.size
    lock = threading.Lock()

    def make(a, b):
        def task():
            chunk = items[a:b]
            keys = np.asarray(chunk if key_of is None else key_of(chunk))
            if keys.shape != chunk.shape:
                raise ValueError("key_of must return one address per item")
            if keys.size and (keys.min() < 0 or keys.max() >= n_bins):
                bad = keys[(keys < 0) | (keys >= n_bins)][0]
                raise IndexError(f"bin address {bad} outside counters of size {n_bins}")
            local = np.bincount(keys.astype(np.intp, copy=False), minlength=n_bins)
            with lock:
                np.add(flat, local.astype(flat.dtype, copy=False), out=flat)
        return task

    run_tasks([make(a, b) for a, b in _bands(items.size, config.workers)], config.workers)
    return counters


def lane_partials(values: np.ndarray, group_width: int) -> np.ndarray:
    """Per-lane sums along the last axis: lane L folds L, L+gw, L+2gw, ...

    Each lane is a strict left fold starting from 0.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[-1]
    acc = np.zeros(values.shape[:-1] + (group_width,))
    full = n // group_width
    strided = values[..., :full * group_width].reshape(values.shape[:-1] + (full, group_width))
    for r in range(full):
        acc += strided[..., r, :]
    tail = values[..., full * group_width:]
    acc[..., :tail.shape[-1]] += tail
    return acc


def tree_reduce(partials: np.ndarray) -> np.ndarray:
    """Shuffle-down reduction of the lane axis: lane i += lane i + half."""
    width = partials.shape[-1]
    while width > 1:
        half = width // 2
        partials = partials[..., :half] + partials[..., half:width]
        width = half
    return partials[..., 0]


def group_strided_reduce(length: int, term: Callable, group_width: int = 32):
    """Sum ``term(i)`` for ``i`` in ``range(length)`` the way a warp would.

    ``term`` receives the whole index vector and returns the terms along the
    last axis; leading axes are batch dimensions reduced independently (one
    lane group each). Returns a float, or an array of batch shape.
    """
    if group_width < 1 or group_width & (group_width - 1):
        raise ValueError(f"group_width must be a power of two, got {group_width}")
    values = np.asarray(term(np.arange(length)), dtype=np.float64)
    if values.shape[-1:] != (length,):
        raise ValueError("term must return one value per index along the last axis")
    total = tree_reduce(lane_partials(values, group_width))
    return float(total) if np.ndim(total) == 0 else total


def serial_sum(values: np.ndarray) -> np.ndarray:
    """Strict left-fold sum along the last axis (one thread, one window)."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[-1] == 0:
        return np.zeros(values.shape[:-1])
    return np.cumsum(values, axis=-1)[..., -1]
