"""Command for computing exact nearest neighbors."""

from __future__ import annotations

import logging
import sys
import time
from typing import TYPE_CHECKING

from crisp.commands import BaseCommand, run_command
from crisp.datasets.groundtruth import brute_force_knn
from crisp.datasets.io import load_fvecs, save_ivecs
from crisp.utils.console import ensure_parent_dir

if TYPE_CHECKING:
    import argparse


logger = logging.getLogger(__name__)


class ComputeGroundTruth(BaseCommand):
    """Computes the exact k nearest neighbors of each query by brute force."""

    DEFAULTS = {
        'k': 100,
        'workers': 1,
    }

    def add_options(
        self,
        parser: argparse.ArgumentParser,
    ) -> None:
        """Add options for the command.

        Args:
            parser (argparse.ArgumentParser):
                The argument parser to add options to.
        """
        parser.add_argument(
            '--dataset',
            metavar='FILENAME',
            help='The fvecs file of base vectors.')
        parser.add_argument(
            '--queries',
            metavar='FILENAME',
            help='The fvecs file of query vectors.')
        parser.add_argument(
            '--k',
            type=int,
            help='The number of neighbors per query. Defaults to 100.')
        parser.add_argument(
            '--workers',
            type=int,
            help='The number of worker threads. Defaults to 1.')
        parser.add_argument(
            '--out',
            metavar='FILENAME',
            help='The ivecs file to write neighbor IDs to.')

    def main(self) -> None:
        """Main entry point for the command."""
        out = self.get_required('out')
        data = load_fvecs(self.get_required('dataset'))
        queries = load_fvecs(self.get_required('queries'))
        k = int(self.config['k'])

        start = time.perf_counter()
        gt = brute_force_knn(data, queries, k,
                             workers=int(self.config['workers']))
        elapsed = time.perf_counter() - start

        ensure_parent_dir(out)
        save_ivecs(gt, out)

        logger.info('Computed exact %d-NN for %d queries in %.2fs',
                    k, queries.n, elapsed)

        self.print_status({
            'command': 'groundtruth',
            'n': data.n,
            'queries': queries.n,
            'k': k,
            'seconds': elapsed,
            'out': out,
        })


def main() -> None:
    sys.exit(run_command(ComputeGroundTruth))
