"""
Logging for fracdelay.

All modules log below the ``fracdelay`` logger. Records carry a ``run`` tag
(``solve seed=5``, ``verify``...) set by :func:`run_context`, so a log file
shared by several batteries can be split by run. Message bodies are
``key=value`` pairs.
"""

import logging
import sys
from contextlib import contextmanager
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Iterator, Optional

ROOT_NAME = "fracdelay"

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s [%(run)s] %(message)s"
CONSOLE_FORMAT = "[%(levelname)s] %(name)s: %(message)s"
DATE_FORMAT = "%H:%M:%S"

LEVEL_COLORS = {
    logging.DEBUG: "\033[2m",
    logging.INFO: "\033[36m",
    logging.WARNING: "\033[33m",
    logging.ERROR: "\033[31m",
    logging.CRITICAL: "\033[1;31m",
}
RESET = "\033[0m"

FILE_MAX_BYTES = 10 * 1024 * 1024
FILE_BACKUPS = 3


class RunTagFilter(logging.Filter):
    """Stamps every record with the active run tag."""

    def __init__(self):
        super().__init__()
        self.tag = "-"

    def filter(self, record: logging.LogRecord) -> bool:
        record.run = self.tag
        return True


class ColoredFormatter(logging.Formatter):
    """Console formatter; colors the whole line by level when stderr is a TTY."""

    def __init__(self, fmt: str = CONSOLE_FORMAT, use_colors: bool = True):
        super().__init__(fmt)
        self.use_colors = use_colors and sys.stderr.isatty()

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        if not self.use_colors:
            return line
        return f"{LEVEL_COLORS.get(record.levelno, '')}{line}{RESET}"


class FracLogger:
    """
    Process-wide owner of the ``fracdelay`` namespace handlers.

    The namespace root stays at DEBUG; thresholds live on the handlers, so a
    DEBUG log file and a quiet WARNING console can coexist.

    Usage:
        logger = get_logger(__name__)
        logger.info("resolvent built: d=%d N=%d", d, N)
    """

    _instance: Optional["FracLogger"] = None

    def __new__(cls):
        if cls._instance is None:
            instance = super().__new__(cls)
            instance._setup()
            cls._instance = instance
        return cls._instance

    def _setup(self) -> None:
        self._root_logger = logging.getLogger(ROOT_NAME)
        self._root_logger.setLevel(logging.DEBUG)
        self._run_filter = RunTagFilter()
        self._console_handler: Optional[logging.Handler] = None
        self._file_handler: Optional[logging.Handler] = None
        self.add_console_handler(level=logging.WARNING)

    def _attach(self, handler: logging.Handler, level: int,
                formatter: logging.Formatter) -> logging.Handler:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        handler.addFilter(self._run_filter)
        self._root_logger.addHandler(handler)
        return handler

    def _detach(self, handler: Optional[logging.Handler]) -> None:
        if handler is not None:
            self._root_logger.removeHandler(handler)
            handler.close()

    def add_console_handler(self, level: int = logging.WARNING, use_colors: bool = True) -> None:
        """Replace the stderr handler."""
        self._detach(self._console_handler)
        self._console_handler = self._attach(logging.StreamHandler(sys.stderr), level,
                                             ColoredFormatter(use_colors=use_colors))

    def add_file_handler(self, filepath: str, level: int = logging.DEBUG) -> None:
        """
        Replace the log file handler.

        The file rotates at 10 MB and keeps three backups; its parent
        directory is created when missing.
        """
        self._detach(self._file_handler)
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        handler = RotatingFileHandler(filepath, maxBytes=FILE_MAX_BYTES,
                                      backupCount=FILE_BACKUPS, encoding="utf-8")
        self._file_handler = self._attach(handler, level,
                                          logging.Formatter(LOG_FORMAT, DATE_FORMAT))

    def set_level(self, level: int) -> None:
        if self._console_handler:
            self._console_handler.setLevel(level)

    def disable_console(self) -> None:
        self._detach(self._console_handler)
        self._console_handler = None

    @property
    def run_tag(self) -> str:
        return self._run_filter.tag

    @run_tag.setter
    def run_tag(self, tag: str) -> None:
        self._run_filter.tag = tag


def get_frac_logger() -> FracLogger:
    """The process-wide FracLogger."""
    return FracLogger()


def get_logger(name: str) -> logging.Logger:
    """
    Logger for a module, placed below ``fracdelay`` if it is not already.

    Example:
        logger = get_logger(__name__)
        logger.warning("contour disagreement: r=%.3f err=%.2e", r, err)
    """
    get_frac_logger()
    if name == ROOT_NAME or name.startswith(ROOT_NAME + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{ROOT_NAME}.{name}")


@contextmanager
def run_context(command: str, seed: Optional[int] = None) -> Iterator[str]:
    """Tag records emitted inside the block with the command and seed."""
    frac_logger = get_frac_logger()
    previous = frac_logger.run_tag
    tag = command if seed is None else f"{command} seed={seed}"
    frac_logger.run_tag = tag
    try:
        yield tag
    finally:
        frac_logger.run_tag = previous


def configure_logging(level: int = logging.WARNING, log_file: Optional[str] = None,
                      use_colors: bool = True) -> None:
    """Console threshold plus an optional DEBUG log file."""
    frac_logger = get_frac_logger()
    frac_logger.add_console_handler(level=level, use_colors=use_colors)
    if log_file:
        frac_logger.add_file_handler(log_file)


def set_log_level(level: int) -> None:
    get_frac_logger().set_level(level)


def enable_debug_logging() -> None:
    set_log_level(logging.DEBUG)


def disable_console_logging() -> None:
    get_frac_logger().disable_console()
