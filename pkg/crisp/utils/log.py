"""Logging setup for the command line tools."""

from __future__ import annotations

import logging
import sys


class LogLevelFilter(logging.Filter):
    """Filter log messages of a given level.

    Only log messages that have the specified level will be allowed by
    this filter. This prevents propagation of higher level types to lower
    log handlers.
    """

    def __init__(
        self,
        level: int,
    ) -> None:
        super().__init__()

        self.level = level

    def filter(
        self,
        record: logging.LogRecord,
    ) -> bool:
        return record.levelno == self.level


def init_logging(
    debug: bool = False,
) -> None:
    """Initialize logging for a command.

    All handlers write to stderr. Standard output is reserved for status
    lines and data written by the commands.

    Args:
        debug (bool, optional):
            Whether to show debug output.
    """
    root = logging.getLogger()

    # Drop handlers left by an earlier command in this process.
    for handler in list(root.handlers):
        if getattr(handler, '_crisp_handler', False):
            root.removeHandler(handler)

    def _add_handler(fmt, level, exact=False):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(fmt))
        handler.setLevel(level)
        handler._crisp_handler = True

        if exact:
            handler.addFilter(LogLevelFilter(level))

        root.addHandler(handler)

    if debug:
        _add_handler('>>> [%(name)s] %(message)s', logging.DEBUG, exact=True)
        root.setLevel(logging.DEBUG)
    else:
        root.setLevel(logging.INFO)

    # Info messages are progress notes, shown without decoration.
    _add_handler('%(message)s', logging.INFO, exact=True)

    # Warnings, errors, and criticals show the level prefix and the message.
    _add_handler('[%(name)s] %(levelname)s: %(message)s', logging.WARNING)
