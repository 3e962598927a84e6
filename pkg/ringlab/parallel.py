"""
Deterministic parallel helpers.

Work is fanned out over an optional executor and gathered back in input order,
so every reduction runs on the caller's thread in a fixed order. Random
substreams are keyed by (seed, stream, step, index) and never by thread.
"""

import logging
from concurrent.futures import Executor
from typing import Callable, Iterable, List, Optional, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Stream tags for SeedSequence spawn keys
STREAM_ENSEMBLE = 1
STREAM_MAXWELL = 2
STREAM_COLLISIONS = 3
STREAM_BOOTSTRAP = 4


def ordered_map(func: Callable[[T], R], items: Iterable[T], executor: Optional[Executor] = None) -> List[R]:
    """Map func over items, optionally on an executor, returning results in input order."""
    items = list(items)
    if executor is None or len(items) <= 1:
        return [func(item) for item in items]
    return list(executor.map(func, items))


def chunk_slices(n: int, chunks: int) -> List[slice]:
    """Split range(n) into at most `chunks` contiguous slices."""
    chunks = max(1, min(chunks, n)) if n > 0 else 1
    bounds = np.linspace(0, n, chunks + 1).astype(int)
    return [slice(int(lo), int(hi)) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]


def map_chunks(func: Callable[[slice], np.ndarray], n: int, executor: Optional[Executor] = None,
               chunks: int = 8) -> np.ndarray:
    """Evaluate an elementwise array function over contiguous chunks and concatenate."""
    if executor is None or n < 2 * chunks:
        return func(slice(0, n))
    parts = ordered_map(func, chunk_slices(n, chunks), executor)
    return np.concatenate(parts, axis=0)


def substream(seed: int, stream: int, step: int = 0, index: int = 0) -> np.random.Generator:
    """Independent generator for one (stream, step, index) cell of work."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(step), int(index)))
    return np.random.default_rng(sequence)
