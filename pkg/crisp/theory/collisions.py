"""Measuring collision statistics on a built index."""

from __future__ import annotations

import logging
from typing import Iterable, Iterator

import numpy as np

from crisp.datasets.types import DatasetMatrix, GroundTruth
from crisp.errors import InvalidArgumentError
from crisp.index.builder import CrispIndex
from crisp.search.config import SearchConfig, SearchMode
from crisp.search.engine import SearchStats, collect_candidates
from crisp.search.scoring import ScoreScratch
from crisp.theory.bounds import TheoryRow, theory_rows


logger = logging.getLogger(__name__)


def nearest_neighbor_collisions(
    index: CrispIndex,
    queries: DatasetMatrix,
    gt: GroundTruth,
    budget_ratio: float,
) -> np.ndarray:
    """Count the subspaces in which each query's nearest neighbor collides.

    The guaranteed-mode traversal is replayed for each query, and the
    binary collision score of its true nearest neighbor is read back.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index.

        queries (crisp.datasets.types.DatasetMatrix):
            The queries.

        gt (crisp.datasets.types.GroundTruth):
            The ground truth. Only the first neighbor of each query is used.

        budget_ratio (float):
            The fraction of N retrieved per subspace.

    Returns:
        numpy.ndarray:
        The ``(q,)`` int collision counts, each in ``[0, M]``.

    Raises:
        crisp.errors.InvalidArgumentError:
            The queries and ground truth didn't line up.
    """
    if gt.q != queries.n or gt.k < 1:
        raise InvalidArgumentError(
            'Ground truth has %d row(s) of %d, expected %d row(s)'
            % (gt.q, gt.k, queries.n))

    gt.validate(index.n)

    config = SearchConfig(k=1,
                          budget_ratio=budget_ratio,
                          min_collision_ratio=1.0,
                          mode=SearchMode.GUARANTEED)
    scratch = ScoreScratch(index.n)
    counts = np.zeros(queries.n, dtype=np.int64)

    for qi in range(queries.n):
        prepared_q = index.prepare_query(queries.row(qi))

        try:
            collect_candidates(index, prepared_q, config, scratch,
                               SearchStats())
            counts[qi] = scratch.scores[gt.ids[qi, 0]]
        finally:
            scratch.reset()

    return counts


def estimate_p_star(
    index: CrispIndex,
    queries: DatasetMatrix,
    gt: GroundTruth,
    budget_ratio: float,
) -> np.ndarray:
    """Estimate each query's single-subspace collision probability.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index.

        queries (crisp.datasets.types.DatasetMatrix):
            The queries.

        gt (crisp.datasets.types.GroundTruth):
            The ground truth.

        budget_ratio (float):
            The fraction of N retrieved per subspace.

    Returns:
        numpy.ndarray:
        The ``(q,)`` float64 fraction of subspaces in which the nearest
        neighbor's cell was activated.
    """
    counts = nearest_neighbor_collisions(index, queries, gt, budget_ratio)
    p_star = counts / index.m

    if len(p_star):
        logger.info('Measured p* over %d queries: mean %.4f, min %.4f',
                    len(p_star), float(p_star.mean()), float(p_star.min()))

    return p_star


class MeasuredTheoryRow(TheoryRow):
    """A theory report row with the failure rate measured on an index."""

    #: The fraction of queries whose nearest neighbor collided in fewer
    #: than ``tau`` subspaces.
    measured_failure: float


def measured_theory_rows(
    index: CrispIndex,
    queries: DatasetMatrix,
    gt: GroundTruth,
    budget_ratio: float,
    taus: Iterable[int],
    trials: int,
    seed: int = 0,
    *,
    workers: int = 1,
) -> Iterator[MeasuredTheoryRow]:
    """Yield theory rows for the collision rate measured on an index.

    The per-query ``p_star`` is measured once. Its mean feeds the predicted
    columns, and each row also reports the observed failure rate at its
    threshold.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index.

        queries (crisp.datasets.types.DatasetMatrix):
            The queries.

        gt (crisp.datasets.types.GroundTruth):
            The ground truth.

        budget_ratio (float):
            The fraction of N retrieved per subspace.

        taus (list of int):
            The collision thresholds.

        trials (int):
            The number of simulated trials per row.

        seed (int, optional):
            The random seed for every simulation.

        workers (int, optional):
            The number of simulation worker threads.

    Yields:
        MeasuredTheoryRow:
        The report row.

    Raises:
        crisp.errors.InvalidArgumentError:
            There were no queries, or a value was out of range.
    """
    if queries.n == 0:
        raise InvalidArgumentError('Measuring collisions needs at least one '
                                   'query')

    p_star = estimate_p_star(index, queries, gt, budget_ratio)

    for row in theory_rows([index.m], [float(p_star.mean())], taus, trials,
                           seed, workers=workers):
        yield {
            **row,
            'measured_failure': float(np.mean(p_star < row['tau'] / index.m)),
        }
