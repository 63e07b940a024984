"""Tests for the shared infrastructure."""

import json
import pickle
from pathlib import Path

import numpy as np
import pytest

from shared.artifacts import atomic_write, read_sidecar, sidecar_path, write_json, write_sidecar
from shared.base import to_jsonable
from shared.cache import MatrixCache, cache_stats, clear_cache, matrix_key
from shared.metrics import MetricsCollector, Timer


class TestMatrixCache:
    def test_hits_and_misses(self):
        cache = MatrixCache(4, name="test")
        m = np.eye(2, dtype=complex)
        assert cache.get(m) is None
        cache.put(m, "identity")
        assert cache.get(m.copy()) == "identity"
        assert cache.stats() == {"name": "test", "size": 1, "hits": 1, "misses": 1}

    def test_key_distinguishes_dtype_and_shape(self):
        assert matrix_key(np.zeros(4)) != matrix_key(np.zeros((2, 2)))
        assert matrix_key(np.zeros(2)) != matrix_key(np.zeros(2, dtype=complex))

    def test_lru_eviction(self):
        cache = MatrixCache(2)
        a, b, c = (np.full((1, 1), v) for v in (1.0, 2.0, 3.0))
        cache.put(a, 1)
        cache.put(b, 2)
        cache.get(a)
        cache.put(c, 3)
        assert cache.get(b) is None
        assert cache.get(a) == 1 and cache.get(c) == 3

    def test_zero_size_stores_nothing(self):
        cache = MatrixCache(0)
        cache.put(np.eye(1), 1)
        assert len(cache) == 0

    def test_rejects_negative_size(self):
        with pytest.raises(ValueError):
            MatrixCache(-1)

    def test_pickles_empty(self):
        cache = MatrixCache(4, name="travel")
        cache.put(np.eye(1), 1)
        clone = pickle.loads(pickle.dumps(cache))
        assert len(clone) == 0 and clone.name == "travel"
        clone.put(np.eye(1), 2)
        assert clone.get(np.eye(1)) == 2

    def test_global_clear(self):
        keep, drop = MatrixCache(4, name="keep"), MatrixCache(4, name="drop-me")
        keep.put(np.eye(1), 1)
        drop.put(np.eye(1), 1)
        assert clear_cache("drop") == 1
        assert len(keep) == 1 and len(drop) == 0
        assert any(s["name"] == "keep" for s in cache_stats())

    def test_size_from_config(self, config_env):
        config_env(CACHE_SIZE=3)
        assert MatrixCache().maxsize == 3


class TestMetrics:
    def test_summary_skips_non_finite(self):
        metrics = MetricsCollector()
        metrics.record_many("iterations", [1, 2, 3, float("nan")])
        summary = metrics.get_summary()["iterations"]
        assert summary["count"] == 3
        assert summary["mean"] == pytest.approx(2.0)
        assert summary["max"] == 3.0

    def test_timing(self):
        metrics = MetricsCollector()
        with metrics.time("block") as timer:
            pass
        assert timer.duration >= 0
        assert [t.name for t in metrics.timings] == ["block"]
        assert "block_time" in metrics.get_summary()
        metrics.reset()
        assert metrics.get_summary() == {} and metrics.timings == []

    def test_timer_result(self):
        with Timer("x") as timer:
            pass
        result = timer.to_result(points=3)
        assert result.name == "x" and result.metadata == {"points": 3}


class TestArtifacts:
    def test_atomic_write_replaces_on_success(self, tmp_path):
        target = tmp_path / "sub" / "out.txt"
        with atomic_write(target) as handle:
            handle.write("done")
        assert target.read_text() == "done"
        assert [p.name for p in target.parent.iterdir()] == ["out.txt"]

    def test_atomic_write_keeps_old_file_on_failure(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("old")
        with pytest.raises(RuntimeError):
            with atomic_write(target) as handle:
                handle.write("partial")
                raise RuntimeError("interrupted")
        assert target.read_text() == "old"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]

    def test_sidecar(self, tmp_path):
        artifact = tmp_path / "curve.csv"
        assert sidecar_path(artifact) == tmp_path / "curve.csv.json"
        write_sidecar(artifact, {"epsilon": np.float64(1e-6), "grid": np.arange(3)})
        assert read_sidecar(artifact) == {"epsilon": 1e-6, "grid": [0, 1, 2]}

    def test_write_json(self, tmp_path):
        path = write_json(tmp_path / "r.json", {"g": 1 - 2j})
        assert json.loads(path.read_text()) == {"g": [1.0, -2.0]}


def test_to_jsonable():
    value = {1: (np.int64(2), np.complex128(1j)), "p": Path("a"), "none": None}
    assert to_jsonable(value) == {"1": [2, [0.0, 1.0]], "p": "a", "none": None}


def test_config_env_override(config_env):
    config = config_env(SOLVER_TOL="1e-8", RESULTS_DIR="elsewhere")
    assert config.SOLVER_TOL == 1e-8
    assert config.RESULTS_DIR == Path("elsewhere")
