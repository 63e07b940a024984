"""Shared utilities for the free spectra suite."""

from shared.base import BaseProject, BaseExperiment, ExperimentResult, ExperimentStatus, to_jsonable
from shared.config import Config, get_config
from shared.logging import setup_logging, get_logger
from shared.cache import MatrixCache, cache_stats, clear_cache, matrix_key
from shared.metrics import MetricsCollector, Timer, TimingResult
from shared.artifacts import atomic_write, read_sidecar, sidecar_path, write_json, write_sidecar

__all__ = [
    "BaseProject",
    "BaseExperiment",
    "ExperimentResult",
    "ExperimentStatus",
    "to_jsonable",
    "Config",
    "get_config",
    "setup_logging",
    "get_logger",
    "MatrixCache",
    "cache_stats",
    "clear_cache",
    "matrix_key",
    "MetricsCollector",
    "Timer",
    "TimingResult",
    "atomic_write",
    "read_sidecar",
    "sidecar_path",
    "write_json",
    "write_sidecar",
]
