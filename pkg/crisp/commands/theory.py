"""Command for reporting recall bounds."""

from __future__ import annotations

import logging
import sys
from typing import Any, TYPE_CHECKING

from crisp.benchmark.report import write_csv
from crisp.commands import BaseCommand, run_command
from crisp.datasets.io import load_fvecs, load_ivecs
from crisp.errors import InvalidArgumentError
from crisp.index.storage import load_index
from crisp.theory.bounds import TheoryRow, theory_rows
from crisp.theory.collisions import MeasuredTheoryRow, measured_theory_rows
from crisp.utils.config import as_list
from crisp.utils.console import ensure_parent_dir

if TYPE_CHECKING:
    import argparse


logger = logging.getLogger(__name__)


#: The CSV column order for the theory report.
THEORY_FIELDS = tuple(TheoryRow.__annotations__)

#: The CSV column order for the theory report measured on an index.
MEASURED_THEORY_FIELDS = tuple(MeasuredTheoryRow.__annotations__)


class TheoryReport(BaseCommand):
    """Compares the Hoeffding recall bound with the exact binomial tail.

    One CSV row is written for every combination of subspace count,
    collision probability, and threshold. The bound column is left empty
    where the bound is vacuous.

    Given an index, the subspace count and collision probability are
    measured from it instead, and each row gains the observed failure
    rate.
    """

    DEFAULTS = {
        'trials': 100_000,
        'seed': 0,
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
            '--m',
            metavar='LIST',
            help='Comma-separated subspace counts.')
        parser.add_argument(
            '--p-star',
            metavar='LIST',
            help='Comma-separated single-subspace collision probabilities.')
        parser.add_argument(
            '--tau',
            metavar='LIST',
            help='Comma-separated collision thresholds.')
        parser.add_argument(
            '--index',
            metavar='FILENAME',
            help='A saved index to measure the collision probability on. '
                 'Replaces --m and --p-star.')
        parser.add_argument(
            '--queries',
            metavar='FILENAME',
            help='The fvecs file of query vectors. Needed with --index.')
        parser.add_argument(
            '--gt',
            metavar='FILENAME',
            help='The ivecs file of true neighbors. Needed with --index.')
        parser.add_argument(
            '--budget-ratio',
            type=float,
            help='The fraction of N retrieved per subspace. Needed with '
                 '--index.')
        parser.add_argument(
            '--trials',
            type=int,
            help='The number of simulated trials per row. Defaults to '
                 '100000.')
        parser.add_argument(
            '--seed',
            type=int,
            help='The random seed for the simulation. Defaults to 0.')
        parser.add_argument(
            '--workers',
            type=int,
            help='The number of simulation worker threads. Defaults to 1.')
        parser.add_argument(
            '--out',
            metavar='FILENAME',
            help='The CSV file to write. Defaults to standard output.')

    def main(self) -> None:
        """Main entry point for the command."""
        taus = as_list(self.get_required('tau'), int)

        if not taus:
            raise InvalidArgumentError('--tau needs at least one value')

        simulation = {
            'trials': int(self.config['trials']),
            'seed': int(self.config['seed']),
            'workers': int(self.config['workers']),
        }
        index_path = self.config.get('index')

        if index_path:
            if self.config.get('m') or self.config.get('p_star'):
                raise InvalidArgumentError(
                    '--m and --p-star are measured from --index and cannot '
                    'be given with it')

            budget_ratio = float(self.get_required('budget_ratio'))
            queries = load_fvecs(self.get_required('queries'))
            gt = load_ivecs(self.get_required('gt'))
            rows: list[Any] = list(measured_theory_rows(
                load_index(index_path), queries, gt, budget_ratio, taus,
                **simulation))
            fields = MEASURED_THEORY_FIELDS
        else:
            ms = as_list(self.get_required('m'), int)
            p_stars = as_list(self.get_required('p_star'), float)

            if not (ms and p_stars):
                raise InvalidArgumentError(
                    '--m, --p-star and --tau each need at least one value')

            rows = list(theory_rows(ms, p_stars, taus, **simulation))
            fields = THEORY_FIELDS

        out = self.config.get('out')

        if out:
            ensure_parent_dir(out)

            with open(out, 'w', newline='') as fp:
                write_csv(rows, fp, fields)

            status = {
                'command': 'theory',
                'rows': len(rows),
                'vacuous': sum(row['hoeffding_bound'] is None
                               for row in rows),
                'out': out,
            }

            if index_path:
                status.update({
                    'index': index_path,
                    'm': rows[0]['m'],
                    'p_star': rows[0]['p_star'],
                })

            self.print_status(status)
        else:
            write_csv(rows, sys.stdout, fields)


def main() -> None:
    sys.exit(run_command(TheoryReport))
