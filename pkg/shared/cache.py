"""Caching utilities keyed by matrix contents."""

import threading
import weakref
from collections import OrderedDict
from typing import Any, Generic, Hashable, Optional, Tuple, TypeVar

import numpy as np

V = TypeVar("V")

_registry: "weakref.WeakSet[MatrixCache]" = weakref.WeakSet()


def matrix_key(matrix: np.ndarray) -> Tuple[Hashable, ...]:
    """Exact key for a matrix: shape, dtype and raw bytes."""
    arr = np.ascontiguousarray(matrix)
    return (arr.shape, arr.dtype.str, arr.tobytes())


class MatrixCache(Generic[V]):
    """Bounded LRU cache from matrices to arbitrary values.

    Reads and inserts are serialized by a lock; a miss only means the caller
    recomputes, so concurrent users never see a torn entry.
    """

    def __init__(self, maxsize: Optional[int] = None, name: str = "matrix"):
        if maxsize is None:
            from shared.config import get_config

            maxsize = get_config().CACHE_SIZE
        if maxsize < 0:
            raise ValueError("maxsize must be non-negative")
        self.name = name
        self.maxsize = maxsize
        self.hits = 0
        self.misses = 0
        self._data: "OrderedDict[Tuple[Hashable, ...], V]" = OrderedDict()
        self._lock = threading.Lock()
        _registry.add(self)

    def get(self, matrix: np.ndarray) -> Optional[V]:
        key = matrix_key(matrix)
        with self._lock:
            value = self._data.get(key)
            if value is None:
                self.misses += 1
                return None
            self._data.move_to_end(key)
            self.hits += 1
            return value

    def put(self, matrix: np.ndarray, value: V) -> None:
        if self.maxsize == 0:
            return
        key = matrix_key(matrix)
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self) -> int:
        with self._lock:
            count = len(self._data)
            self._data.clear()
            return count

    def __len__(self) -> int:
        return len(self._data)

    def stats(self) -> dict:
        return {"name": self.name, "size": len(self), "hits": self.hits, "misses": self.misses}

    def __getstate__(self) -> dict:
        # Caches travel to worker processes empty.
        state = self.__dict__.copy()
        state["_data"] = OrderedDict()
        state.pop("_lock")
        return state

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)
        self._lock = threading.Lock()
        _registry.add(self)


def clear_cache(pattern: Optional[str] = None) -> int:
    """Clear every live cache whose name contains ``pattern``; returns entries dropped."""
    count = 0
    for cache in list(_registry):
        if pattern is None or pattern in cache.name:
            count += cache.clear()
    return count


def cache_stats() -> list[dict[str, Any]]:
    return [cache.stats() for cache in list(_registry)]
