"""Command for searching an index."""

from __future__ import annotations

import logging
import sys
import time
from typing import Any, Mapping, Optional, TYPE_CHECKING

import numpy as np

from crisp.commands import BaseCommand, run_command
from crisp.datasets.groundtruth import recall_at_k
from crisp.datasets.io import load_fvecs, load_ivecs, save_ivecs
from crisp.datasets.types import GroundTruth
from crisp.errors import InvalidArgumentError
from crisp.index.storage import load_index
from crisp.search.config import (DEFAULT_AD_STRIDE,
                                 DEFAULT_EPS0,
                                 DEFAULT_PATIENCE_FACTOR,
                                 SearchConfig,
                                 SearchMode)
from crisp.search.engine import SearchResult, search_batch
from crisp.utils.console import ensure_parent_dir

if TYPE_CHECKING:
    import argparse


logger = logging.getLogger(__name__)


#: Defaults for the options shared by every search.
SEARCH_DEFAULTS: Mapping[str, Any] = {
    'k': 100,
    'patience_factor': DEFAULT_PATIENCE_FACTOR,
    'eps0': DEFAULT_EPS0,
    'ad_stride': DEFAULT_AD_STRIDE,
    'workers': 1,
}


def parse_mode(value: Any) -> SearchMode:
    """Return the search mode for an option value.

    Args:
        value (object):
            A mode name (``guaranteed`` or ``optimized``) or number.

    Returns:
        crisp.search.config.SearchMode:
        The mode.

    Raises:
        crisp.errors.InvalidArgumentError:
            The value didn't name a mode.
    """
    if isinstance(value, SearchMode):
        return value

    if isinstance(value, str):
        try:
            return SearchMode[value.strip().upper()]
        except KeyError:
            pass

    try:
        return SearchMode(int(value))
    except (TypeError, ValueError):
        raise InvalidArgumentError(
            'Unknown search mode "%s". Expected guaranteed or optimized.'
            % value)


def add_search_options(
    parser: argparse.ArgumentParser,
    *,
    workers: bool = True,
) -> None:
    """Add the search options that take a single value.

    Args:
        parser (argparse.ArgumentParser):
            The argument parser to add options to.

        workers (bool, optional):
            Whether to add the --workers option. Commands that also build
            share the build option instead.
    """
    parser.add_argument(
        '--k',
        type=int,
        help='The number of neighbors per query. Defaults to 100.')
    parser.add_argument(
        '--patience-factor',
        type=float,
        help='Stop verifying after this many times k candidates fail to '
             'improve the results (optimized mode). "inf" disables it. '
             'Defaults to %g.' % DEFAULT_PATIENCE_FACTOR)
    parser.add_argument(
        '--eps0',
        type=float,
        help='The ADSampling safety margin. Defaults to %g.' % DEFAULT_EPS0)
    parser.add_argument(
        '--ad-stride',
        type=int,
        help='The number of dimensions between ADSampling checks. Defaults '
             'to %d.' % DEFAULT_AD_STRIDE)

    if workers:
        parser.add_argument(
            '--workers',
            type=int,
            help='The number of query worker threads. Defaults to 1.')


def make_search_config(
    config: Mapping[str, Any],
    *,
    mode: Any,
    budget_ratio: Any,
    min_collision_ratio: Any,
) -> SearchConfig:
    """Create a search configuration from merged command options.

    Args:
        config (dict):
            The merged options.

        mode (object):
            The search mode.

        budget_ratio (object):
            The per-subspace retrieval budget.

        min_collision_ratio (object):
            The collision threshold ratio.

    Returns:
        crisp.search.config.SearchConfig:
        The validated configuration.

    Raises:
        crisp.errors.InvalidArgumentError:
            A value was invalid.
    """
    patience_factor = config.get('patience_factor')

    try:
        return SearchConfig(
            k=int(config['k']),
            budget_ratio=float(budget_ratio),
            min_collision_ratio=float(min_collision_ratio),
            mode=parse_mode(mode),
            patience_factor=(None if patience_factor is None
                             else float(patience_factor)),
            eps0=float(config['eps0']),
            ad_stride=int(config['ad_stride']))
    except InvalidArgumentError:
        raise
    except (TypeError, ValueError) as e:
        raise InvalidArgumentError('Invalid search option: %s' % e)


def results_to_ivecs(
    results: list[SearchResult],
    k: int,
) -> GroundTruth:
    """Pack result ids into a rectangular array for writing.

    Queries with fewer than ``k`` results are padded with -1.

    Args:
        results (list of crisp.search.engine.SearchResult):
            The results.

        k (int):
            The row width.

    Returns:
        crisp.datasets.types.GroundTruth:
        The packed ids.
    """
    ids = np.full((len(results), k), -1, dtype=np.int32)

    for row, result in enumerate(results):
        ids[row, :len(result.ids)] = result.ids

    return GroundTruth(ids)


class SearchIndex(BaseCommand):
    """Searches a saved index for each query and writes the neighbor IDs."""

    DEFAULTS = dict(SEARCH_DEFAULTS,
                    mode=SearchMode.OPTIMIZED.name.lower())

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
            help='The index file to search.')
        parser.add_argument(
            '--queries',
            metavar='FILENAME',
            help='The fvecs file of query vectors.')
        parser.add_argument(
            '--gt',
            metavar='FILENAME',
            help='An optional ivecs file of true neighbors, for measuring '
                 'recall.')
        parser.add_argument(
            '--mode',
            choices=[mode.name.lower() for mode in SearchMode],
            help='The execution mode. Defaults to optimized.')
        parser.add_argument(
            '--budget-ratio',
            type=float,
            help='The fraction of N retrieved per subspace. Required.')
        parser.add_argument(
            '--min-collision-ratio',
            type=float,
            help='The fraction of subspaces a candidate must collide in. '
                 'Required.')
        add_search_options(parser)
        parser.add_argument(
            '--out',
            metavar='FILENAME',
            help='The ivecs file to write result IDs to.')

    def main(self) -> None:
        """Main entry point for the command."""
        out = self.get_required('out')
        search_config = make_search_config(
            self.config,
            mode=self.config['mode'],
            budget_ratio=self.get_required('budget_ratio'),
            min_collision_ratio=self.get_required('min_collision_ratio'))
        index = load_index(self.get_required('index'))
        queries = load_fvecs(self.get_required('queries'))
        gt_path: Optional[str] = self.config.get('gt')
        gt = load_ivecs(gt_path) if gt_path else None
        workers = int(self.config['workers'])

        start = time.perf_counter()
        results = search_batch(index, queries, search_config,
                               workers=workers)
        elapsed = time.perf_counter() - start

        ensure_parent_dir(out)
        save_ivecs(results_to_ivecs(results, search_config.k), out)

        latencies = np.array([result.stats.latency for result in results])
        status: dict[str, Any] = {
            'command': 'search',
            'queries': queries.n,
            'k': search_config.k,
            'mode': search_config.mode.name.lower(),
            'qps': queries.n / elapsed if elapsed > 0 else None,
            'mean_latency_ms': (float(latencies.mean()) * 1000
                                if len(latencies) else None),
            'mean_candidates': (
                float(np.mean([r.stats.candidates for r in results]))
                if results else None),
            'parallel': workers > 1,
            'out': out,
        }

        if gt is not None:
            status['recall_at_k'] = recall_at_k(
                [result.ids for result in results], gt, search_config.k)

        self.print_status(status)


def main() -> None:
    sys.exit(run_command(SearchIndex))
