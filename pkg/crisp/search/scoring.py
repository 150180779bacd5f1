"""Collision scoring and candidate filtering."""

from __future__ import annotations

import logging

import numpy as np

from crisp.index.postings import CsrPostingIndex
from crisp.search.config import SearchConfig, SearchMode
from crisp.search.traversal import CellCursor


logger = logging.getLogger(__name__)


class ScoreScratch:
    """Per-query collision score accumulator.

    The score array is sized for the whole index and reused across queries.
    Only the slots listed in :py:attr:`touched` are ever nonzero, so
    :py:meth:`reset` costs time proportional to the points touched.
    """

    ######################
    # Instance variables #
    ######################

    #: The ``(n,)`` int32 collision scores.
    scores: np.ndarray

    #: Arrays of point ids that went from a zero to a nonzero score.
    _touched_chunks: list[np.ndarray]

    def __init__(
        self,
        n: int,
    ) -> None:
        """Initialize the scratch space.

        Args:
            n (int):
                The number of indexed points.
        """
        self.scores = np.zeros(n, dtype=np.int32)
        self._touched_chunks = []

    @property
    def n(self) -> int:
        """The number of slots."""
        return self.scores.shape[0]

    @property
    def touched(self) -> np.ndarray:
        """The ids with a nonzero score, in first-touched order."""
        if not self._touched_chunks:
            return np.zeros(0, dtype=np.int32)

        return np.concatenate(self._touched_chunks)

    def add(
        self,
        ids: np.ndarray,
        weight: int,
    ) -> None:
        """Add a weight to the score of every id.

        Args:
            ids (numpy.ndarray):
                The ids. These must not repeat.

            weight (int):
                The weight to add.
        """
        fresh = ids[self.scores[ids] == 0]

        if len(fresh):
            self._touched_chunks.append(fresh)

        self.scores[ids] += weight

    def reset(self) -> None:
        """Zero every touched slot."""
        for chunk in self._touched_chunks:
            self.scores[chunk] = 0

        self._touched_chunks = []


def accumulate_subspace(
    cursor: CellCursor,
    postings: CsrPostingIndex,
    subspace: int,
    scratch: ScoreScratch,
    config: SearchConfig,
    budget: int,
) -> int:
    """Score the points in a subspace's nearest cells.

    Cells are taken from the cursor until at least ``budget`` ids have been
    streamed or the cells run out. In optimized mode, the first ``k`` cells
    add 2 to each of their points' scores and later cells add 1. In
    guaranteed mode every cell adds 1.

    Args:
        cursor (crisp.search.traversal.CellCursor):
            The subspace's cell cursor.

        postings (crisp.index.postings.CsrPostingIndex):
            The index's posting lists.

        subspace (int):
            The subspace index.

        scratch (ScoreScratch):
            The score accumulator.

        config (crisp.search.config.SearchConfig):
            The search configuration.

        budget (int):
            The number of ids to retrieve.

    Returns:
        int:
        The number of ids retrieved.
    """
    offsets = postings.offsets[subspace]
    ids = postings.ids[subspace]
    weighted = config.mode == SearchMode.OPTIMIZED
    retrieved = 0

    while retrieved < budget:
        item = cursor.next_cell()

        if item is None:
            break

        cell, _cost, rank = item
        start = offsets[cell]
        end = offsets[cell + 1]

        if end > start:
            weight = 2 if weighted and rank <= config.k else 1
            scratch.add(ids[start:end], weight)
            retrieved += int(end - start)

    return retrieved


def filter_candidates(
    scratch: ScoreScratch,
    config: SearchConfig,
    m: int,
) -> tuple[np.ndarray, int, bool]:
    """Select the touched points with enough collisions.

    A point is a candidate if its score is at least
    ``tau = ceil(min_collision_ratio * m)``. If fewer than ``k`` points
    qualify, the highest-scoring touched points are taken instead (ties by
    ascending id), up to ``k`` of them.

    Args:
        scratch (ScoreScratch):
            The completed score accumulator.

        config (crisp.search.config.SearchConfig):
            The search configuration.

        m (int):
            The number of subspaces.

    Returns:
        tuple:
        A 3-tuple in the form of:

        Tuple:
            0 (numpy.ndarray):
                The candidate ids, in ascending order.

            1 (int):
                The threshold ``tau``.

            2 (bool):
                Whether the fallback was used.
    """
    tau = config.tau(m)
    touched = scratch.touched
    scores = scratch.scores[touched]
    survivors = touched[scores >= tau]

    if len(survivors) >= min(config.k, len(touched)):
        return np.sort(survivors), tau, False

    order = np.lexsort((touched, -scores.astype(np.int64)))
    fallback = touched[order[:config.k]]

    logger.debug('Only %d of %d touched points reached tau=%d; '
                 'falling back to the top %d by score',
                 len(survivors), len(touched), tau, len(fallback))

    return np.sort(fallback), tau, True
