"""Logging configuration."""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

_CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level:<8}</level> | "
    "<cyan>{extra[name]}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - "
    "<level>{message}</level>"
)
_FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level:<8} | {extra[name]}:{function}:{line} - {message}"

logger.configure(extra={"name": "freespec"})


def setup_logging(
    level: Optional[str] = None,
    log_file: Optional[Path] = None,
    serialize: bool = False,
) -> None:
    """Configure application logging.

    ``serialize`` switches the file sink to JSON lines, one record per line.
    """
    if level is None:
        from shared.config import get_config

        config = get_config()
        level = config.LOG_LEVEL
        log_file = log_file or config.LOG_FILE

    logger.remove()

    logger.add(sys.stderr, level=level, format=_CONSOLE_FORMAT, colorize=True)

    if log_file:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            log_file,
            level=level,
            format=_FILE_FORMAT,
            serialize=serialize,
            rotation="10 MB",
            retention="7 days",
            compression="zip",
        )


def get_logger(name: str):
    """Get a named logger instance."""
    return logger.bind(name=name)
