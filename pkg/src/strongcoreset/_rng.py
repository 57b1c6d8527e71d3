"""Counter-based RNG stream derivation and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

# stable stream tags so adding a new consumer never shifts existing streams
STREAMS = {
    "countsketch": 1,
    "gaussian": 2,
    "sampling": 3,
    "irls": 4,
    "istar": 5,
    "median": 6,
    "lewis": 7,
    "validate": 8,
    "seeding": 9,
    "queries": 10,
    "claims": 11,
    "data": 12,
    "retry": 13,
    "adaptive": 14,
}


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``.

    Keys are folded into the ``spawn_key`` of a ``SeedSequence``, so the stream
    for a given key tuple never depends on how many other streams were drawn
    before it or on the thread that draws it.
    """
    spawn = tuple(STREAMS[k] if isinstance(k, str) else int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=spawn))


def derive_seed(seed: int, *keys: int | str) -> int:
    return int(stream(seed, *keys).integers(0, 2**63 - 1))


def resolve_threads(threads: int | None) -> int:
    if threads is None or threads <= 0:
        return os.cpu_count() or 1
    return int(threads)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = 1) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on up to ``threads`` workers.

    Results come back in input order regardless of completion order.
    """
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def ordered_sum(values: Sequence[float]) -> float:
    """Sum with a fixed reduction order (numpy pairwise summation)."""
    return float(np.sum(np.asarray(values, dtype=float)))
