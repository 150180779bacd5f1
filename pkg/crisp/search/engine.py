"""Query execution."""

from __future__ import annotations

import heapq
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from crisp.datasets.groundtruth import squared_distances, top_k_ascending
from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError
from crisp.index.builder import CrispIndex
from crisp.search.config import SearchConfig, SearchMode
from crisp.search.scoring import (ScoreScratch,
                                  accumulate_subspace,
                                  filter_candidates)
from crisp.search.traversal import CellCursor
from crisp.search.verification import adsampling_verify, hamming_rerank


logger = logging.getLogger(__name__)


class SearchStats:
    """Counters describing the work done for one query."""

    ######################
    # Instance variables #
    ######################

    #: The number of candidates that passed the collision filter.
    candidates: int

    #: Whether the candidate fallback was used.
    fallback: bool

    #: The wall-clock time spent on the query, in seconds.
    latency: float

    #: Whether verification stopped early because patience ran out.
    patience_terminated: bool

    #: The number of candidates ADSampling pruned.
    pruned: int

    #: The collision threshold.
    tau: int

    #: The number of distinct points scored in any subspace.
    touched: int

    #: The number of candidates verified (fully or until pruned).
    verified: int

    def __init__(self) -> None:
        self.candidates = 0
        self.fallback = False
        self.latency = 0.0
        self.patience_terminated = False
        self.pruned = 0
        self.tau = 0
        self.touched = 0
        self.verified = 0

    def __repr__(self) -> str:
        return ('<SearchStats touched=%d candidates=%d tau=%d verified=%d '
                'pruned=%d>'
                % (self.touched, self.candidates, self.tau, self.verified,
                   self.pruned))


class SearchResult:
    """The nearest neighbors found for one query."""

    ######################
    # Instance variables #
    ######################

    #: The squared L2 distances, ascending.
    distances: np.ndarray

    #: The neighbor ids, matching :py:attr:`distances`.
    ids: np.ndarray

    #: The work counters for the query.
    stats: SearchStats

    def __init__(
        self,
        *,
        ids: np.ndarray,
        distances: np.ndarray,
        stats: SearchStats,
    ) -> None:
        self.ids = ids
        self.distances = distances
        self.stats = stats

    def __len__(self) -> int:
        return len(self.ids)

    def __repr__(self) -> str:
        return '<SearchResult ids=%r>' % (self.ids.tolist(),)


def collect_candidates(
    index: CrispIndex,
    prepared_q: np.ndarray,
    config: SearchConfig,
    scratch: ScoreScratch,
    stats: SearchStats,
) -> np.ndarray:
    """Score every subspace and filter the touched points.

    The scratch space is left holding the scores. The caller resets it.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index.

        prepared_q (numpy.ndarray):
            The rotated and padded query.

        config (crisp.search.config.SearchConfig):
            The search configuration.

        scratch (crisp.search.scoring.ScoreScratch):
            The score accumulator.

        stats (SearchStats):
            The counters to update.

    Returns:
        numpy.ndarray:
        The candidate ids.
    """
    codebooks = index.codebooks
    budget = config.budget(index.n)

    for subspace in range(index.m):
        left_slice, right_slice = codebooks.subspace_bounds(subspace)
        cursor = CellCursor.for_query(
            prepared_q[left_slice.start:right_slice.stop],
            codebooks.centroids_left[subspace],
            codebooks.centroids_right[subspace])
        accumulate_subspace(cursor, index.postings, subspace, scratch, config,
                            budget)

    candidates, tau, fallback = filter_candidates(scratch, config, index.m)
    stats.touched = len(scratch.touched)
    stats.candidates = len(candidates)
    stats.tau = tau
    stats.fallback = fallback

    return candidates


def verify_exact(
    data: np.ndarray,
    prepared_q: np.ndarray,
    candidates: np.ndarray,
    k: int,
    stats: SearchStats,
) -> tuple[np.ndarray, np.ndarray]:
    """Compute exact distances to every candidate and keep the best ``k``.

    Args:
        data (numpy.ndarray):
            The stored vectors.

        prepared_q (numpy.ndarray):
            The rotated and padded query.

        candidates (numpy.ndarray):
            The candidate ids.

        k (int):
            The number of results.

        stats (SearchStats):
            The counters to update.

    Returns:
        tuple:
        A 2-tuple of the result ids and squared distances, ascending by
        distance and then id.
    """
    dists = squared_distances(data[candidates], prepared_q)
    pos = top_k_ascending(dists, candidates, k)
    stats.verified = len(candidates)

    return candidates[pos].astype(np.int32), dists[pos]


def verify_adaptive(
    data: np.ndarray,
    prepared_q: np.ndarray,
    ordered: np.ndarray,
    config: SearchConfig,
    stats: SearchStats,
) -> tuple[np.ndarray, np.ndarray]:
    """Verify candidates in order with ADSampling and patience.

    A running top-k is kept in a max-heap. Until it holds ``k`` results no
    candidate can be pruned. Each candidate that doesn't change the top-k
    (including pruned ones) counts against the patience limit, and any
    change resets it.

    Args:
        data (numpy.ndarray):
            The stored vectors.

        prepared_q (numpy.ndarray):
            The rotated and padded query.

        ordered (numpy.ndarray):
            The candidate ids, in verification order.

        config (crisp.search.config.SearchConfig):
            The search configuration.

        stats (SearchStats):
            The counters to update.

    Returns:
        tuple:
        A 2-tuple of the result ids and squared distances, ascending by
        distance and then id.
    """
    k = config.k
    patience = config.patience
    # Entries are (-distance, -id), so the root is the worst result.
    heap: list[tuple[float, int]] = []
    stale = 0

    for point_id in ordered.tolist():
        r_k_sq = -heap[0][0] if len(heap) == k else float('inf')
        dist, _scanned = adsampling_verify(prepared_q, data[point_id],
                                           r_k_sq, config.eps0,
                                           config.ad_stride)
        stats.verified += 1
        improved = False

        if dist is None:
            stats.pruned += 1
        elif len(heap) < k:
            heapq.heappush(heap, (-dist, -point_id))
            improved = True
        elif (-dist, -point_id) > heap[0]:
            heapq.heapreplace(heap, (-dist, -point_id))
            improved = True

        if improved:
            stale = 0
        else:
            stale += 1

            if patience is not None and stale >= patience:
                stats.patience_terminated = True
                break

    best = sorted((-neg_dist, -neg_id) for neg_dist, neg_id in heap)

    return (np.array([point_id for _dist, point_id in best], dtype=np.int32),
            np.array([dist for dist, _point_id in best], dtype=np.float64))


def search(
    index: CrispIndex,
    q: np.ndarray,
    config: SearchConfig,
    *,
    scratch: Optional[ScoreScratch] = None,
) -> SearchResult:
    """Find the approximate k nearest neighbors of a query.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index to search.

        q (numpy.ndarray):
            The ``(D,)`` query, in the original (unrotated, unpadded) space.

        config (crisp.search.config.SearchConfig):
            The search configuration.

        scratch (crisp.search.scoring.ScoreScratch, optional):
            A reusable score accumulator sized for the index. One is
            allocated if not provided.

    Returns:
        SearchResult:
        Up to ``k`` neighbors with their squared distances, ascending.

    Raises:
        crisp.errors.InvalidArgumentError:
            ``k`` exceeded the index size, or the query had the wrong
            dimension.
    """
    if config.k > index.n:
        raise InvalidArgumentError(
            'k=%d exceeds the number of indexed points (%d)'
            % (config.k, index.n))

    start = time.perf_counter()
    stats = SearchStats()
    prepared_q = index.prepare_query(q)

    if scratch is None:
        scratch = ScoreScratch(index.n)
    elif scratch.n != index.n:
        raise InvalidArgumentError('Score scratch is sized for %d points, '
                                   'not %d' % (scratch.n, index.n))

    try:
        candidates = collect_candidates(index, prepared_q, config, scratch,
                                        stats)
    finally:
        scratch.reset()

    data = index.data.data

    if config.mode == SearchMode.GUARANTEED:
        ids, dists = verify_exact(data, prepared_q, candidates, config.k,
                                  stats)
    else:
        ordered = hamming_rerank(candidates, index.query_code(prepared_q),
                                 index.binary_codes)
        ids, dists = verify_adaptive(data, prepared_q, ordered, config,
                                     stats)

    stats.latency = time.perf_counter() - start

    logger.debug('Query: touched=%d candidates=%d tau=%d fallback=%s '
                 'verified=%d pruned=%d patience_terminated=%s (%.3fms)',
                 stats.touched, stats.candidates, stats.tau, stats.fallback,
                 stats.verified, stats.pruned, stats.patience_terminated,
                 stats.latency * 1000)

    return SearchResult(ids=ids, distances=dists, stats=stats)


def search_batch(
    index: CrispIndex,
    queries: DatasetMatrix,
    config: SearchConfig,
    *,
    workers: int = 1,
) -> list[SearchResult]:
    """Search for every query in a batch.

    Each worker thread runs one query at a time with its own score scratch.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index to search.

        queries (crisp.datasets.types.DatasetMatrix):
            The queries.

        config (crisp.search.config.SearchConfig):
            The search configuration.

        workers (int, optional):
            The number of worker threads.

    Returns:
        list of SearchResult:
        The results, in query order.

    Raises:
        crisp.errors.InvalidArgumentError:
            ``k`` exceeded the index size, or the queries had the wrong
            dimension.
    """
    if queries.n and queries.d != index.original_d:
        raise InvalidArgumentError(
            'Query dimension %d does not match index dimension %d'
            % (queries.d, index.original_d))

    local = threading.local()

    def _search(qi: int) -> SearchResult:
        scratch = getattr(local, 'scratch', None)

        if scratch is None:
            scratch = ScoreScratch(index.n)
            local.scratch = scratch

        return search(index, queries.row(qi), config, scratch=scratch)

    start = time.perf_counter()

    if workers > 1 and queries.n > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_search, range(queries.n)))
    else:
        results = [_search(qi) for qi in range(queries.n)]

    elapsed = time.perf_counter() - start

    if queries.n:
        logger.info('Searched %d queries in %.3fs (%.1f QPS, %s mode, '
                    '%d worker(s))',
                    queries.n, elapsed,
                    queries.n / elapsed if elapsed > 0 else float('inf'),
                    config.mode.name.lower(), workers)

    return results
