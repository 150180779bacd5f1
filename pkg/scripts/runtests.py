#!/usr/bin/env python
from __future__ import annotations

import os
import sys

import pytest


def run_tests() -> int:
    pytest_argv = [
        '-v',
        '--cov=crisp',
        '--cov-report=term-missing',
    ]

    if len(sys.argv) > 1:
        pytest_argv += sys.argv[1:]

    return pytest.main(pytest_argv)


if __name__ == '__main__':
    os.chdir(os.path.join(os.path.dirname(__file__), '..'))
    sys.path.insert(0, os.getcwd())
    sys.exit(run_tests())
