"""Configuration management."""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Config(BaseSettings):
    """Application configuration.

    Every field can be overridden from the environment with the ``FREESPEC_``
    prefix, e.g. ``FREESPEC_SOLVER_TOL=1e-10``.
    """

    model_config = SettingsConfigDict(
        env_prefix="FREESPEC_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # App settings
    APP_NAME: str = "Free Polynomial Spectra"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[Path] = None

    # Paths
    BASE_DIR: Path = Path(__file__).parent.parent
    RESULTS_DIR: Path = Path("results")

    # Compute
    MAX_WORKERS: int = 4
    DEFAULT_SEED: int = 42

    # Subordination solver
    SOLVER_TOL: float = 1e-12
    SOLVER_MAX_ITER: int = 20000
    MARGIN_TOL: float = 1e-9
    CACHE_SIZE: int = 256

    # Quadrature
    QUAD_TOL: float = 1e-10
    QUAD_ORDER: int = 24
    QUAD_MAX_PANELS: int = 4096

    # Density sweep
    DENSITY_EPSILON: float = 1e-6
    GRID_POINTS: int = 1000
    GRID_PADDING: float = 0.1
    MASS_TOL: float = 1e-3

    # Moment oracle
    ORACLE_MAX_WORD: int = 16
    ORACLE_MAX_WORDS: int = 200_000

    # Monte Carlo
    MC_SIZE: int = 2000
    MC_REPS: int = 5
    MAX_MATRIX_SIZE: int = 8000


@lru_cache()
def get_config() -> Config:
    """Get cached configuration instance."""
    return Config()
