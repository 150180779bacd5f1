"""Command for building an index."""

from __future__ import annotations

import logging
import sys
import time
from typing import Any, Mapping, TYPE_CHECKING

from crisp.commands import BaseCommand, run_command
from crisp.datasets.io import load_fvecs
from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError
from crisp.index.builder import CrispIndex, build_index
from crisp.index.codebooks import DEFAULT_CENTROIDS, DEFAULT_TRAINING_SAMPLE
from crisp.index.kmeans import DEFAULT_ITERATIONS
from crisp.index.storage import save_index
from crisp.preprocessing.rotation import DEFAULT_TAU_CEV, RotationPolicy
from crisp.utils.console import ensure_parent_dir

if TYPE_CHECKING:
    import argparse


logger = logging.getLogger(__name__)


#: Defaults for the options that control index construction.
BUILD_DEFAULTS: Mapping[str, Any] = {
    'centroids': DEFAULT_CENTROIDS,
    'tau_cev': DEFAULT_TAU_CEV,
    'seed': 0,
    'rotation': RotationPolicy.ADAPTIVE.value,
    'pad': True,
    'kmeans_iters': DEFAULT_ITERATIONS,
    'kmeans_sample': DEFAULT_TRAINING_SAMPLE,
    'workers': 1,
}


def add_build_options(parser: argparse.ArgumentParser) -> None:
    """Add the options that control index construction.

    Args:
        parser (argparse.ArgumentParser):
            The argument parser to add options to.
    """
    parser.add_argument(
        '--centroids',
        type=int,
        help='The number of centroids per subspace half (K). Defaults to '
             '%d.' % DEFAULT_CENTROIDS)
    parser.add_argument(
        '--seed',
        type=int,
        help='The random seed for sampling, rotation and clustering. '
             'Defaults to 0.')
    parser.add_argument(
        '--rotation',
        choices=[policy.value for policy in RotationPolicy],
        help='When to rotate the data. Defaults to adaptive, which rotates '
             'when the CEV exceeds --tau-cev.')
    parser.add_argument(
        '--no-pad',
        dest='pad',
        action='store_false',
        default=None,
        help='Fail instead of zero-padding when D is not divisible by '
             '2 * M.')
    parser.add_argument(
        '--kmeans-iters',
        type=int,
        help='The number of Lloyd iterations per codebook. Defaults to '
             '%d.' % DEFAULT_ITERATIONS)
    parser.add_argument(
        '--kmeans-sample',
        type=int,
        help='The maximum number of rows used to train each codebook. '
             'Defaults to %d.' % DEFAULT_TRAINING_SAMPLE)
    parser.add_argument(
        '--workers',
        type=int,
        help='The number of worker threads. Defaults to 1.')


def build_from_config(
    data: DatasetMatrix,
    config: Mapping[str, Any],
    *,
    m: int,
    tau_cev: float,
    copy: bool = False,
) -> tuple[CrispIndex, float]:
    """Build an index using merged command options.

    Args:
        data (crisp.datasets.types.DatasetMatrix):
            The dataset.

        config (dict):
            The merged options.

        m (int):
            The number of subspaces.

        tau_cev (float):
            The CEV threshold.

        copy (bool, optional):
            Whether to leave ``data`` untouched.

    Returns:
        tuple:
        A 2-tuple of the index and the build time in seconds.

    Raises:
        crisp.errors.InvalidArgumentError:
            An option was invalid.
    """
    try:
        policy = RotationPolicy(config['rotation'])
    except ValueError:
        raise InvalidArgumentError('Unknown rotation policy "%s"'
                                   % config['rotation'])

    start = time.perf_counter()
    index = build_index(data, int(m),
                        k=int(config['centroids']),
                        tau_cev=float(tau_cev),
                        seed=int(config['seed']),
                        policy=policy,
                        pad=bool(config['pad']),
                        kmeans_iters=int(config['kmeans_iters']),
                        kmeans_sample=int(config['kmeans_sample']),
                        workers=int(config['workers']),
                        copy=copy)

    return index, time.perf_counter() - start


class BuildIndex(BaseCommand):
    """Builds an index over an fvecs dataset and saves it to a file."""

    DEFAULTS = BUILD_DEFAULTS

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
            '--subspaces',
            type=int,
            help='The number of subspaces (M). Required.')
        parser.add_argument(
            '--tau-cev',
            type=float,
            help='The CEV threshold above which data is rotated. Defaults '
                 'to %g.' % DEFAULT_TAU_CEV)
        add_build_options(parser)
        parser.add_argument(
            '--out',
            metavar='FILENAME',
            help='The index file to write.')

    def main(self) -> None:
        """Main entry point for the command."""
        out = self.get_required('out')
        m = int(self.get_required('subspaces'))
        data = load_fvecs(self.get_required('dataset'))

        index, build_seconds = build_from_config(
            data, self.config,
            m=m,
            tau_cev=self.config['tau_cev'])

        ensure_parent_dir(out)
        save_index(index, out)

        self.print_success('Built %r in %.2fs' % (index, build_seconds))

        status = index.describe()
        status.update({
            'command': 'build',
            'build_seconds': build_seconds,
            'seed': int(self.config['seed']),
            'tau_cev': float(self.config['tau_cev']),
            'out': out,
        })
        self.print_status(status)


def main() -> None:
    sys.exit(run_command(BuildIndex))
