"""Command for sweeping search and build parameters."""

from __future__ import annotations

import itertools
import logging
import os
import sys
from typing import Any, Iterator, Optional, TYPE_CHECKING

from crisp.benchmark.pareto import (BUILD_TIME_FIELDS,
                                    min_build_time_table,
                                    pareto_front)
from crisp.benchmark.report import (REPORT_FIELDS,
                                    BenchReport,
                                    evaluate_config,
                                    write_csv)
from crisp.commands import BaseCommand, run_command
from crisp.commands.build import (BUILD_DEFAULTS,
                                  add_build_options,
                                  build_from_config)
from crisp.commands.search import (SEARCH_DEFAULTS,
                                   add_search_options,
                                   make_search_config,
                                   parse_mode)
from crisp.datasets.io import load_fvecs, load_ivecs
from crisp.errors import InvalidArgumentError
from crisp.index.builder import CrispIndex
from crisp.index.storage import load_index
from crisp.preprocessing.rotation import DEFAULT_TAU_CEV
from crisp.search.config import SearchMode
from crisp.utils.config import as_list
from crisp.utils.console import ensure_parent_dir

if TYPE_CHECKING:
    import argparse


logger = logging.getLogger(__name__)


class SweepConfigs(BaseCommand):
    """Benchmarks a grid of configurations and writes CSV reports.

    Every combination of mode, budget ratio, and minimum collision ratio is
    evaluated. When a dataset is given instead of an index, an index is
    built for every combination of subspace count and CEV threshold.

    Three CSV files are written: all rows, the recall/QPS Pareto frontier,
    and the fastest build reaching each recall level.
    """

    DEFAULTS = {
        **BUILD_DEFAULTS,
        **SEARCH_DEFAULTS,
        'modes': [mode.name.lower() for mode in SearchMode],
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
            '--index',
            metavar='FILENAME',
            help='A saved index to sweep search parameters over.')
        parser.add_argument(
            '--dataset',
            metavar='FILENAME',
            help='An fvecs dataset to build indexes from. Needed to sweep '
                 '--subspaces or --tau-cevs.')
        parser.add_argument(
            '--queries',
            metavar='FILENAME',
            help='The fvecs file of query vectors.')
        parser.add_argument(
            '--gt',
            metavar='FILENAME',
            help='The ivecs file of true neighbors.')
        parser.add_argument(
            '--modes',
            metavar='LIST',
            help='Comma-separated execution modes. Defaults to both.')
        parser.add_argument(
            '--budget-ratios',
            metavar='LIST',
            help='Comma-separated fractions of N retrieved per subspace.')
        parser.add_argument(
            '--min-collision-ratios',
            metavar='LIST',
            help='Comma-separated collision threshold ratios.')
        parser.add_argument(
            '--subspaces',
            metavar='LIST',
            help='Comma-separated subspace counts to build with.')
        parser.add_argument(
            '--tau-cevs',
            metavar='LIST',
            help='Comma-separated CEV thresholds to build with. Defaults to '
                 '%g.' % DEFAULT_TAU_CEV)
        add_build_options(parser)
        add_search_options(parser, workers=False)
        parser.add_argument(
            '--out',
            metavar='FILENAME',
            help='The CSV file to write every row to.')
        parser.add_argument(
            '--pareto-out',
            metavar='FILENAME',
            help='The CSV file to write the Pareto frontier to. Defaults to '
                 'the --out name with a .pareto.csv suffix.')
        parser.add_argument(
            '--build-time-out',
            metavar='FILENAME',
            help='The CSV file to write the minimum build time per recall '
                 'level to. Defaults to the --out name with a '
                 '.build_time.csv suffix.')

    def iter_indexes(self) -> Iterator[tuple[CrispIndex, dict[str, Any]]]:
        """Load or build every index in the sweep.

        Indexes are built one at a time, as the caller asks for them.

        Yields:
            tuple:
            Each index paired with the build values to echo in its rows.

        Raises:
            crisp.errors.InvalidArgumentError:
                The index sources were missing or conflicting.
        """
        dataset_path: Optional[str] = self.config.get('dataset')
        index_path: Optional[str] = self.config.get('index')
        subspaces = as_list(self.config.get('subspaces'), int)
        tau_cevs = as_list(self.config.get('tau_cevs'), float)

        if dataset_path:
            if not subspaces:
                raise InvalidArgumentError(
                    'Missing required option --subspaces')

            data = load_fvecs(dataset_path)

            for m, tau_cev in itertools.product(subspaces,
                                                tau_cevs or [DEFAULT_TAU_CEV]):
                index, build_seconds = build_from_config(
                    data, self.config,
                    m=m,
                    tau_cev=tau_cev,
                    copy=True)
                yield index, {
                    'build_seconds': build_seconds,
                    'tau_cev': tau_cev,
                    'seed': int(self.config['seed']),
                }

            return

        if index_path:
            if subspaces or tau_cevs:
                raise InvalidArgumentError(
                    '--subspaces and --tau-cevs need --dataset to rebuild '
                    'from')

            yield load_index(index_path), {
                'build_seconds': None,
                'tau_cev': None,
                'seed': None,
            }

            return

        raise InvalidArgumentError('Either --index or --dataset is required')

    def main(self) -> None:
        """Main entry point for the command."""
        out = self.get_required('out')
        stem = os.path.splitext(out)[0]
        pareto_out = self.config.get('pareto_out') or stem + '.pareto.csv'
        build_time_out = (self.config.get('build_time_out') or
                          stem + '.build_time.csv')

        modes = [parse_mode(mode)
                 for mode in as_list(self.config['modes'], str)]
        budget_ratios = as_list(self.config.get('budget_ratios'), float)
        min_collision_ratios = as_list(
            self.config.get('min_collision_ratios'), float)

        if not (modes and budget_ratios and min_collision_ratios):
            raise InvalidArgumentError(
                'The sweep grid is empty. --modes, --budget-ratios and '
                '--min-collision-ratios each need at least one value.')

        search_configs = [
            make_search_config(self.config,
                               mode=mode,
                               budget_ratio=budget_ratio,
                               min_collision_ratio=min_collision_ratio)
            for mode, budget_ratio, min_collision_ratio in itertools.product(
                modes, budget_ratios, min_collision_ratios)
        ]

        queries = load_fvecs(self.get_required('queries'))
        gt = load_ivecs(self.get_required('gt'))
        workers = int(self.config['workers'])
        rows: list[BenchReport] = []

        for index, build_values in self.iter_indexes():
            for search_config in search_configs:
                rows.append(evaluate_config(index, queries, gt,
                                            search_config,
                                            workers=workers,
                                            **build_values))

        front = pareto_front(rows)
        build_times = min_build_time_table(rows)

        for path, table, fields in ((out, rows, REPORT_FIELDS),
                                    (pareto_out, front, REPORT_FIELDS),
                                    (build_time_out, build_times,
                                     BUILD_TIME_FIELDS)):
            ensure_parent_dir(path)

            with open(path, 'w', newline='') as fp:
                write_csv(table, fp, fields)

        self.print_success('Evaluated %d configurations (%d on the Pareto '
                           'frontier)' % (len(rows), len(front)))
        self.print_status({
            'command': 'sweep',
            'rows': len(rows),
            'pareto_rows': len(front),
            'build_time_rows': len(build_times),
            'parallel': workers > 1,
            'out': out,
            'pareto_out': pareto_out,
            'build_time_out': build_time_out,
        })


def main() -> None:
    sys.exit(run_command(SweepConfigs))
