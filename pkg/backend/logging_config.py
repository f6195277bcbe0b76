"""
Logging setup and the shared log layouts for Scherk Lab runs.
Entry points call setup_logging; library modules only create named loggers.
"""

import logging
import sys
from typing import Iterable, Optional

import numpy as np

from backend.config import config

RULE = "=" * 80
QUIET_LOGGERS = ("PIL", "matplotlib", "urllib3", "uvicorn.access")


def _handler(handler: logging.Handler, level: int) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(fmt=config.LOG_FORMAT, datefmt=config.LOG_DATE_FORMAT))
    return handler


def setup_logging(
    log_level: Optional[str] = None,
    log_file: Optional[str] = None,
    console_output: bool = True
) -> logging.Logger:
    """
    Configure the root logger for a CLI or API process.

    Args:
        log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL (default: LOG_LEVEL)
        log_file: Optional file name placed in LOG_DIR
        console_output: Whether to log to stdout

    Returns:
        The root logger
    """
    level = getattr(logging, (log_level or config.LOG_LEVEL).upper())

    root = logging.getLogger()
    root.setLevel(level)
    for old in list(root.handlers):
        root.removeHandler(old)
        old.close()

    if console_output:
        root.addHandler(_handler(logging.StreamHandler(sys.stdout), level))
    if log_file:
        path = config.get_log_path(log_file)
        root.addHandler(_handler(logging.FileHandler(path, mode="a", encoding="utf-8"), level))

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)
    return root


def format_value(value) -> str:
    """Compact text for summary rows; floats keep 6 significant digits."""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def log_banner(logger: logging.Logger, title: str, *details: str):
    logger.info(RULE)
    logger.info(title)
    for line in details:
        logger.info(line)
    logger.info(RULE)


def log_summary(logger: logging.Logger, title: str, rows: Iterable[tuple[str, object]]):
    """Aligned 'key value' block closing a subcommand."""
    logger.info("")
    log_banner(logger, title)
    for key, value in rows:
        logger.info(f"{key:<32} {format_value(value)}")
    logger.info(RULE)
