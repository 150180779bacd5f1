"""Exact nearest-neighbor search and recall measurement."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

import numpy as np

from crisp.datasets.types import DatasetMatrix, GroundTruth
from crisp.errors import InvalidArgumentError


logger = logging.getLogger(__name__)


def squared_distances(
    rows: np.ndarray,
    q: np.ndarray,
) -> np.ndarray:
    """Return squared L2 distances from a query to a set of rows.

    Differences and sums are computed in float64.

    Args:
        rows (numpy.ndarray):
            The ``(n, d)`` vectors.

        q (numpy.ndarray):
            The ``(d,)`` query.

    Returns:
        numpy.ndarray:
        The ``(n,)`` float64 squared distances.
    """
    diff = rows.astype(np.float64) - q.astype(np.float64)

    return np.einsum('ij,ij->i', diff, diff)


def top_k_ascending(
    dists: np.ndarray,
    ids: np.ndarray,
    k: int,
) -> np.ndarray:
    """Return positions of the ``k`` smallest distances.

    Positions are ordered by ascending distance, with ties broken by
    ascending ID.

    Args:
        dists (numpy.ndarray):
            The distances.

        ids (numpy.ndarray):
            The IDs matching each distance.

        k (int):
            The number of positions to return. This is clamped to the
            number of distances.

    Returns:
        numpy.ndarray:
        The selected positions into ``dists``.
    """
    n = dists.shape[0]
    k = min(k, n)

    if k == 0:
        return np.zeros(0, dtype=np.int64)

    if k < n:
        # Everything tied with the k-th value has to be considered so the
        # ID tie-break stays exact.
        kth = np.partition(dists, k - 1)[k - 1]
        pool = np.flatnonzero(dists <= kth)
    else:
        pool = np.arange(n)

    order = np.lexsort((ids[pool], dists[pool]))

    return pool[order[:k]]


def brute_force_knn(
    data: DatasetMatrix,
    queries: DatasetMatrix,
    k: int,
    *,
    workers: int = 1,
) -> GroundTruth:
    """Compute the exact k nearest neighbors of each query.

    Args:
        data (crisp.datasets.types.DatasetMatrix):
            The dataset to search.

        queries (crisp.datasets.types.DatasetMatrix):
            The queries.

        k (int):
            The number of neighbors per query.

        workers (int, optional):
            The number of worker threads. Queries are split across workers.

    Returns:
        crisp.datasets.types.GroundTruth:
        The neighbor IDs and squared distances, sorted by ascending distance
        and then ascending ID.

    Raises:
        crisp.errors.InvalidArgumentError:
            ``k`` was out of range or the dimensions didn't match.
    """
    if k < 1 or k > data.n:
        raise InvalidArgumentError(
            'k must be between 1 and the dataset size (%d), got %d'
            % (data.n, k))

    if queries.n and queries.d != data.d:
        raise InvalidArgumentError(
            'Query dimension %d does not match dataset dimension %d'
            % (queries.d, data.d))

    all_ids = np.arange(data.n, dtype=np.int64)
    out_ids = np.empty((queries.n, k), dtype=np.int32)
    out_dists = np.empty((queries.n, k), dtype=np.float32)

    def _search(qi: int) -> None:
        dists = squared_distances(data.data, queries.row(qi))
        pos = top_k_ascending(dists, all_ids, k)
        out_ids[qi] = pos
        out_dists[qi] = dists[pos]

    if workers > 1 and queries.n > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            list(executor.map(_search, range(queries.n)))
    else:
        for qi in range(queries.n):
            _search(qi)

    logger.debug('Computed exact %d-NN for %d queries over %d vectors',
                 k, queries.n, data.n)

    return GroundTruth(out_ids, distances=out_dists)


def recall_at_k(
    results: Sequence[Iterable[int]],
    gt: GroundTruth,
    k: int,
) -> float:
    """Return the mean Recall@k of a set of results.

    For each query, this is the number of IDs in the result row that appear
    in the first ``k`` ground-truth IDs, divided by ``k``.

    Args:
        results (list of iterable of int):
            The result IDs for each query. Rows may be empty.

        gt (crisp.datasets.types.GroundTruth):
            The ground truth. It must have at least ``k`` IDs per row.

        k (int):
            The recall depth.

    Returns:
        float:
        The mean recall, in ``[0, 1]``. This is 0 when there are no queries.

    Raises:
        crisp.errors.InvalidArgumentError:
            ``k`` was out of range or the query counts didn't match.
    """
    if k < 1 or k > gt.k:
        raise InvalidArgumentError(
            'k must be between 1 and the ground truth depth (%d), got %d'
            % (gt.k, k))

    if len(results) != gt.q:
        raise InvalidArgumentError(
            'Got results for %d queries, but ground truth has %d'
            % (len(results), gt.q))

    if gt.q == 0:
        return 0.0

    total = 0

    for row, gt_row in zip(results, gt.ids):
        total += len(set(int(i) for i in row) &
                     set(gt_row[:k].tolist()))

    return total / (k * gt.q)
