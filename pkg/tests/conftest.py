"""Shared fixtures."""

import numpy as np
import pytest

from projects.free_spectra.algorithms.linearize import reference_polynomial
from projects.free_spectra.models.measures import MarchenkoPastur, Semicircle
from shared.cache import clear_cache
from shared.config import get_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def anticommutator():
    return reference_polynomial("anticommutator")


@pytest.fixture
def semicircles():
    return (Semicircle(0.0, 1.0), Semicircle(0.0, 1.0))


@pytest.fixture
def free_poisson():
    return MarchenkoPastur(1.0, 1.0)


@pytest.fixture
def config_env(monkeypatch):
    """Set FREESPEC_* variables for one test; the cached config is rebuilt around it."""

    def apply(**values):
        for key, value in values.items():
            monkeypatch.setenv(f"FREESPEC_{key}", str(value))
        get_config.cache_clear()
        return get_config()

    yield apply
    get_config.cache_clear()


@pytest.fixture(autouse=True)
def _fresh_caches():
    yield
    clear_cache()
