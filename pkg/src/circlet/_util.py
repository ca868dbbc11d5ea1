"""Small shared helpers: thread budget, parallel map, seeded streams."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "CIRCLET_THREADS"


def thread_count() -> int:
    """Thread budget from the CIRCLET_THREADS environment variable.

    Unset, empty, or invalid values mean 1 (sequential).
    """
    raw = os.environ.get(THREADS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Order-preserving map, threaded when the budget allows it.

    Results are collected in input order, so callers see identical output
    regardless of the thread count.
    """
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based per-sample random stream.

    Each (seed, index) pair owns an independent Philox stream, so sample
    draws do not depend on evaluation order or thread count.
    """
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def stream_rng(seed: int, label: str) -> np.random.Generator:
    """Named substream of a seed, for coarse-grained independent draws."""
    h = np.uint64(1469598103934665603)
    for ch in label.encode():
        h = np.uint64((int(h) ^ ch) * 1099511628211 % (1 << 64))
    return np.random.Generator(np.random.Philox(key=[seed, int(h)]))


def as_int(x) -> int:
    """Exact integer from a numpy scalar or Python number."""
    if isinstance(x, (int, np.integer)):
        return int(x)
    raise TypeError(f"expected an integer, got {type(x).__name__}")


def unique_ids(ids: Iterable) -> list:
    seen = set()
    out = []
    for i in ids:
        if i in seen:
            raise ValueError(f"duplicate id: {i!r}")
        seen.add(i)
        out.append(i)
    return out
