import logging
import sys
from collections.abc import Generator
from contextlib import contextmanager
from typing import Any

LOGGER_NAME = "driftlab"

_logger: logging.Logger | None = None
_formatter: "IndentingFormatter | None" = None
_indentation: int = 0


@contextmanager
def indent_log(num: int = 2) -> Generator[None, None, None]:
    """
    Indent every log line emitted inside the block, e.g. the runs of a sweep
    nested under the sweep header.
    """
    global _indentation

    _indentation += num
    try:
        yield
    finally:
        _indentation -= num


class IndentingFormatter(logging.Formatter):
    default_time_format = "%Y-%m-%dT%H:%M:%S"

    def __init__(
        self,
        *args: Any,
        add_timestamp: bool = False,
        **kwargs: Any,
    ) -> None:
        """
        A logging.Formatter that obeys the indent_log() context manager.

        :param add_timestamp: prefix every line with the record's timestamp.
        """
        self.add_timestamp = add_timestamp
        super().__init__(*args, **kwargs)

    def get_message_start(self, levelno: int) -> str:
        if levelno < logging.WARNING:
            return ""
        if levelno < logging.ERROR:
            return "WARNING: "
        return "ERROR: "

    def format(self, record: logging.LogRecord) -> str:
        formatted = self.get_message_start(record.levelno) + super().format(record)

        prefix = ""
        if self.add_timestamp:
            prefix = f"{self.formatTime(record)} "
        prefix += " " * _indentation
        return "".join(prefix + line for line in formatted.splitlines(True))


def _verbosity_to_level(verbosity: int | bool) -> int:
    if verbosity > 2:
        raise ValueError(
            f"verbosity should be one of 0, 1, 2, False, True; got {verbosity!r}. "
            "To set an explicit logging level call `setLevel` on the logger."
        )
    if verbosity == 2:
        return logging.DEBUG
    if verbosity == 1:  # True == 1
        return logging.INFO
    return logging.WARNING


def _set_formatter_once() -> None:
    global _logger, _formatter

    if _logger is not None:
        return

    _logger = logging.getLogger(LOGGER_NAME)
    _formatter = IndentingFormatter()

    # stdout may carry CSV output of the command line tool
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(logging.NOTSET)
    ch.setFormatter(_formatter)

    _logger.addHandler(ch)


class LoggerWrapper:
    # need a default value because of __getattr__/__setattr__
    logger: logging.Logger = None  # type: ignore[assignment]

    def __init__(self, logger: logging.Logger):
        self.__dict__["logger"] = logger

    def __getattr__(self, attr):
        return getattr(self.logger, attr)

    def __setattr__(self, attr, value):
        return setattr(self.logger, attr, value)

    @contextmanager
    def ctx_level(
        self, verbosity: int | bool | None = None
    ) -> Generator[logging.Logger, None, None]:
        """
        Temporarily switch the level; ``None`` keeps the current one.

        At debug verbosity the handler also stamps every line with its time,
        so per-block progress of long sweeps can be timed from the log.
        """
        cur_level = self.logger.level
        stamped = _formatter.add_timestamp if _formatter else False
        if verbosity is not None:
            level = _verbosity_to_level(verbosity)
            self.logger.setLevel(level)
            if _formatter:
                _formatter.add_timestamp = level == logging.DEBUG
        try:
            yield self.logger
        finally:
            self.logger.setLevel(cur_level)
            if _formatter:
                _formatter.add_timestamp = stamped


def setup_logging() -> LoggerWrapper:
    _set_formatter_once()
    assert _logger
    return LoggerWrapper(_logger)
