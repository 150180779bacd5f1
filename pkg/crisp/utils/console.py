"""Console output helpers for the command line tools."""

from __future__ import annotations

import json
import math
import os
import sys
from typing import IO, Any, Mapping, Optional

import numpy as np


def _json_safe(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()

    if isinstance(value, float) and not math.isfinite(value):
        return None

    return value


def print_status(
    payload: Mapping[str, Any],
    fp: Optional[IO[str]] = None,
) -> None:
    """Print a single JSON status line.

    Status lines are the machine-readable summary of a command, and are the
    only thing written to standard output unless the command writes its data
    there. Non-finite floats are written as ``null``.

    Args:
        payload (dict):
            The status values.

        fp (io.TextIOBase, optional):
            The stream to write to. This defaults to standard output.
    """
    if fp is None:
        fp = sys.stdout

    fp.write(json.dumps({
        key: _json_safe(value)
        for key, value in payload.items()
    }, sort_keys=True))
    fp.write('\n')
    fp.flush()


def ensure_parent_dir(path: str) -> None:
    """Create the parent directory of an output file if it doesn't exist.

    Args:
        path (str):
            The output file path.
    """
    dirname = os.path.dirname(path)

    if dirname and not os.path.exists(dirname):
        os.makedirs(dirname, 0o755)
