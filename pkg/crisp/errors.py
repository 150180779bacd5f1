"""Errors raised by CRISP."""

from __future__ import annotations

from typing import Optional


class CrispError(Exception):
    """Base class for all CRISP errors."""


class InvalidArgumentError(CrispError, ValueError):
    """An argument or precondition was invalid.

    This covers things like asking for more neighbors than there are
    vectors, mismatched dimensions, or out-of-range configuration values.
    """


class FormatError(CrispError):
    """A file on disk was malformed."""

    ######################
    # Instance variables #
    ######################

    #: The file that failed to parse.
    filename: Optional[str]

    #: The 0-based record index where parsing failed, if known.
    record: Optional[int]

    def __init__(
        self,
        message: str,
        *,
        filename: Optional[str] = None,
        record: Optional[int] = None,
    ) -> None:
        """Initialize the error.

        Args:
            message (str):
                The error message.

            filename (str, optional):
                The file that failed to parse.

            record (int, optional):
                The 0-based record index where parsing failed.
        """
        if filename is not None:
            if record is not None:
                message = '%s in "%s" (record %d)' % (message, filename,
                                                      record)
            else:
                message = '%s in "%s"' % (message, filename)

        super().__init__(message)

        self.filename = filename
        self.record = record


class DatasetFormatError(FormatError):
    """A vector or ground-truth file was malformed."""


class IndexFormatError(FormatError):
    """A serialized index file was malformed or of the wrong version."""
