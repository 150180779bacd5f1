"""Multi-sequence traversal of a subspace's cells.

Each cell is a pair of one left and one right centroid, and its cost for a
query is the sum of the two partial squared distances. With both centroid
lists sorted, cells can be produced in ascending cost order by walking a
frontier over the sorted grid.
"""

from __future__ import annotations

import heapq
from typing import Iterator, Optional

import numpy as np


def sorted_partial_distances(
    q_half: np.ndarray,
    centroids: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Sort a half's centroids by squared distance to the query half.

    Args:
        q_half (numpy.ndarray):
            The ``(h,)`` query half.

        centroids (numpy.ndarray):
            The ``(k, h)`` centroids.

    Returns:
        tuple:
        A 2-tuple of the ascending float64 squared distances and the
        matching centroid ids. Ties are ordered by ascending id.
    """
    diff = centroids.astype(np.float64) - np.asarray(q_half, np.float64)
    dists = np.einsum('ij,ij->i', diff, diff)
    order = np.argsort(dists, kind='stable')

    return dists[order], order


class CellCursor:
    """Produces a subspace's cells in ascending cost order.

    Each call to :py:meth:`next_cell` pops the cheapest unvisited
    ``(i, j)`` position of the sorted grid and pushes its right and lower
    neighbors.
    """

    ######################
    # Instance variables #
    ######################

    #: The sorted left-half distances.
    dist_left: np.ndarray

    #: The sorted right-half distances.
    dist_right: np.ndarray

    #: The min-heap of ``(cost, i, j)`` positions.
    frontier: list[tuple[float, int, int]]

    #: The left centroid ids, in sorted order.
    ids_left: np.ndarray

    #: The right centroid ids, in sorted order.
    ids_right: np.ndarray

    #: The number of centroids per half.
    k: int

    #: The number of cells emitted so far.
    rank: int

    #: The positions pushed onto the frontier so far.
    visited: set[tuple[int, int]]

    def __init__(
        self,
        dist_left: np.ndarray,
        ids_left: np.ndarray,
        dist_right: np.ndarray,
        ids_right: np.ndarray,
    ) -> None:
        """Initialize the cursor.

        Args:
            dist_left (numpy.ndarray):
                The ascending left-half distances.

            ids_left (numpy.ndarray):
                The left centroid id of each distance.

            dist_right (numpy.ndarray):
                The ascending right-half distances.

            ids_right (numpy.ndarray):
                The right centroid id of each distance.
        """
        self.dist_left = dist_left
        self.ids_left = ids_left
        self.dist_right = dist_right
        self.ids_right = ids_right
        self.k = len(ids_right)
        self.rank = 0
        self.frontier = [(float(dist_left[0] + dist_right[0]), 0, 0)]
        self.visited = {(0, 0)}

    @classmethod
    def for_query(
        cls,
        q_sub: np.ndarray,
        left: np.ndarray,
        right: np.ndarray,
    ) -> CellCursor:
        """Create a cursor for a query's subspace slice.

        Args:
            q_sub (numpy.ndarray):
                The query's subspace slice (both halves).

            left (numpy.ndarray):
                The ``(k, h)`` left centroids.

            right (numpy.ndarray):
                The ``(k, h)`` right centroids.

        Returns:
            CellCursor:
            The new cursor.
        """
        half = left.shape[1]
        dist_left, ids_left = sorted_partial_distances(q_sub[:half], left)
        dist_right, ids_right = sorted_partial_distances(q_sub[half:], right)

        return cls(dist_left, ids_left, dist_right, ids_right)

    def next_cell(self) -> Optional[tuple[int, float, int]]:
        """Return the next cheapest cell.

        Returns:
            tuple:
            A 3-tuple of the cell id, its cost, and its 1-based rank, or
            ``None`` once every cell has been emitted.
        """
        if not self.frontier:
            return None

        cost, i, j = heapq.heappop(self.frontier)

        for ni, nj in ((i + 1, j), (i, j + 1)):
            if (ni < len(self.dist_left) and nj < len(self.dist_right) and
                (ni, nj) not in self.visited):
                self.visited.add((ni, nj))
                heapq.heappush(
                    self.frontier,
                    (float(self.dist_left[ni] + self.dist_right[nj]),
                     ni, nj))

        self.rank += 1

        return (int(self.ids_left[i]) * self.k + int(self.ids_right[j]),
                cost, self.rank)

    def __iter__(self) -> Iterator[tuple[int, float, int]]:
        while True:
            item = self.next_cell()

            if item is None:
                return

            yield item
