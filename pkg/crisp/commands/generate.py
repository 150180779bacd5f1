"""Command for generating synthetic datasets."""

from __future__ import annotations

import logging
import sys
from typing import TYPE_CHECKING

from crisp.commands import BaseCommand, run_command
from crisp.datasets.io import save_fvecs
from crisp.datasets.synthetic import GENERATORS, generate_base_and_queries
from crisp.utils.console import ensure_parent_dir

if TYPE_CHECKING:
    import argparse


logger = logging.getLogger(__name__)


class GenerateDataset(BaseCommand):
    """Generates a synthetic base set and query set as fvecs files."""

    DEFAULTS = {
        'kind': 'isotropic',
        'num_queries': 100,
        'seed': 0,
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
            '--kind',
            choices=sorted(GENERATORS),
            help='The distribution to draw vectors from. Defaults to '
                 'isotropic.')
        parser.add_argument(
            '--size',
            type=int,
            help='The number of base vectors.')
        parser.add_argument(
            '--num-queries',
            type=int,
            help='The number of query vectors. Defaults to 100.')
        parser.add_argument(
            '--dim',
            type=int,
            help='The dimensionality of the vectors.')
        parser.add_argument(
            '--seed',
            type=int,
            help='The random seed. Defaults to 0.')
        parser.add_argument(
            '--base-out',
            metavar='FILENAME',
            help='The fvecs file to write base vectors to.')
        parser.add_argument(
            '--queries-out',
            metavar='FILENAME',
            help='The fvecs file to write query vectors to.')

    def main(self) -> None:
        """Main entry point for the command."""
        kind = self.config['kind']
        size = int(self.get_required('size'))
        num_queries = int(self.config['num_queries'])
        dim = int(self.get_required('dim'))
        seed = int(self.config['seed'])
        base_out = self.get_required('base_out')
        queries_out = self.get_required('queries_out')

        base, queries = generate_base_and_queries(kind,
                                                  n=size,
                                                  queries=num_queries,
                                                  d=dim,
                                                  seed=seed)

        for path, dataset in ((base_out, base), (queries_out, queries)):
            ensure_parent_dir(path)
            save_fvecs(dataset, path)

        logger.info('Wrote %d %s base vectors and %d queries (D=%d)',
                    base.n, kind, queries.n, dim)

        self.print_status({
            'command': 'generate',
            'kind': kind,
            'n': base.n,
            'queries': queries.n,
            'd': dim,
            'seed': seed,
            'base_out': base_out,
            'queries_out': queries_out,
        })


def main() -> None:
    sys.exit(run_command(GenerateDataset))
