"""Loguru sinks for hints: one console sink, plus a log file inside each run directory."""

import sys
from contextlib import suppress
from pathlib import Path

from loguru import logger

RUN_LOG = "hints.log"

_CONSOLE_FORMAT = "<green>{time:HH:mm:ss}</green> <level>{level:<7}</level> {message}"
_FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level:<8} | {name}:{function}:{line} | {message}"

_run_sink: int | None = None


def configure_logger(level: str = "INFO", serialize: bool = False) -> None:
    """Replaces every sink with a single stderr sink.

    Args:
        level: Minimum log level (DEBUG, INFO, WARNING, ERROR).
        serialize: If True, write JSON lines instead of the colored console format.
    """
    global _run_sink
    logger.remove()
    _run_sink = None
    logger.add(
        sys.stderr,
        level=level.upper(),
        format="{message}" if serialize else _CONSOLE_FORMAT,
        serialize=serialize,
        colorize=not serialize,
    )


def log_to_run_dir(out_dir: Path, level: str = "INFO") -> Path:
    """Appends log records to ``out_dir/hints.log``; replaces the previous run's file sink."""
    global _run_sink
    if _run_sink is not None:
        with suppress(ValueError):
            logger.remove(_run_sink)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / RUN_LOG
    _run_sink = logger.add(
        path,
        level=level.upper(),
        format=_FILE_FORMAT,
        mode="a",
        encoding="utf-8",
        buffering=1,
    )
    return path


configure_logger()
