"""Loguru sinks for CAPFI runs.

The terminal only hears about problems unless ``--debug`` is set. Every run
appends to ``capfi.log`` in the log directory; reports themselves carry no
timestamps, so that file is where run times live.
"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger

LOG_FILE_NAME = "capfi.log"

TERMINAL_FORMAT = "<level>{level: <8}</level> | <level>{message}</level>"
DEBUG_TERMINAL_FORMAT = (
    "<green>{time:HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{line}</cyan> | "
    "<level>{message}</level>"
)
RUN_LOG_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | "
    "{process.id} | {name}:{function}:{line} | {message}"
)


def setup_logging(log_dir: Optional[Path] = None, debug: bool = False) -> Optional[Path]:
    """Route toolkit logs to stderr and the run log.

    Args:
        log_dir: Directory of the run log; the working directory when None.
        debug: Show DEBUG and up on stderr and in the run log.

    Returns:
        Path of the run log, or None when it could not be opened.
    """
    logger.remove()
    logger.add(
        sys.stderr,
        format=DEBUG_TERMINAL_FORMAT if debug else TERMINAL_FORMAT,
        level="DEBUG" if debug else "WARNING",
        colorize=debug,
    )

    run_log = (Path(log_dir) if log_dir else Path.cwd()) / LOG_FILE_NAME
    try:
        run_log.parent.mkdir(parents=True, exist_ok=True)
        logger.add(
            run_log,
            format=RUN_LOG_FORMAT,
            level="DEBUG" if debug else "INFO",
            rotation="10 MB",
            retention="30 days",
            compression="zip",
        )
    except OSError as exc:
        logger.warning(f"Run log disabled; cannot write to {run_log} ({exc})")
        return None

    logger.debug(f"Run log: {run_log}")
    return run_log
