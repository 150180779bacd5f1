"""Compressed sparse row (CSR) inverted lists.

Each subspace stores its posting lists as two flat arrays: ``offsets``
(K² + 1 entries) and ``ids`` (N entries). The points of cell ``c`` are
``ids[offsets[c]:offsets[c + 1]]``, in ascending id order.
"""

from __future__ import annotations

import logging

import numpy as np

from crisp.errors import InvalidArgumentError


logger = logging.getLogger(__name__)


class CsrPostingIndex:
    """Per-subspace posting lists laid out as CSR arrays."""

    ######################
    # Instance variables #
    ######################

    #: The ``(m, n)`` int32 point ids, grouped by cell.
    ids: np.ndarray

    #: The ``(m, num_cells + 1)`` int64 cell boundaries into ``ids``.
    offsets: np.ndarray

    def __init__(
        self,
        *,
        offsets: np.ndarray,
        ids: np.ndarray,
    ) -> None:
        """Initialize the posting index.

        Args:
            offsets (numpy.ndarray):
                The ``(m, num_cells + 1)`` offsets.

            ids (numpy.ndarray):
                The ``(m, n)`` point ids.

        Raises:
            crisp.errors.InvalidArgumentError:
                The arrays were inconsistent.
        """
        offsets = np.ascontiguousarray(offsets, dtype=np.int64)
        ids = np.ascontiguousarray(ids, dtype=np.int32)

        if (offsets.ndim != 2 or ids.ndim != 2 or
            offsets.shape[0] != ids.shape[0]):
            raise InvalidArgumentError(
                'Offsets %r and ids %r do not describe the same subspaces'
                % (offsets.shape, ids.shape))

        if ((offsets[:, 0] != 0).any() or
            (offsets[:, -1] != ids.shape[1]).any() or
            (np.diff(offsets, axis=1) < 0).any()):
            raise InvalidArgumentError(
                'Offsets must run monotonically from 0 to N')

        if ids.size and (ids.min() < 0 or ids.max() >= ids.shape[1]):
            raise InvalidArgumentError('Point ids must lie in [0, %d)'
                                       % ids.shape[1])

        self.offsets = offsets
        self.ids = ids

    @property
    def m(self) -> int:
        """The number of subspaces."""
        return self.offsets.shape[0]

    @property
    def n(self) -> int:
        """The number of indexed points."""
        return self.ids.shape[1]

    @property
    def num_cells(self) -> int:
        """The number of cells per subspace."""
        return self.offsets.shape[1] - 1

    @property
    def logical_bytes(self) -> int:
        """The size of the offsets and ids, in bytes."""
        return self.offsets.nbytes + self.ids.nbytes

    def cell(
        self,
        m: int,
        cell: int,
    ) -> np.ndarray:
        """Return the ids stored in a cell.

        Args:
            m (int):
                The subspace index.

            cell (int):
                The cell id.

        Returns:
            numpy.ndarray:
            A view of the cell's ids.
        """
        offsets = self.offsets[m]

        return self.ids[m, offsets[cell]:offsets[cell + 1]]

    def cell_sizes(
        self,
        m: int,
    ) -> np.ndarray:
        """Return the number of points in every cell of a subspace.

        Args:
            m (int):
                The subspace index.

        Returns:
            numpy.ndarray:
            The ``(num_cells,)`` sizes.
        """
        return np.diff(self.offsets[m])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CsrPostingIndex):
            return NotImplemented

        return (np.array_equal(self.offsets, other.offsets) and
                np.array_equal(self.ids, other.ids))

    def __repr__(self) -> str:
        return ('<CsrPostingIndex m=%d cells=%d n=%d>'
                % (self.m, self.num_cells, self.n))


def build_csr(
    cells: np.ndarray,
    num_cells: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Lay out one subspace's cell assignments as CSR arrays.

    This is a stable counting sort of ``(cell, id)`` pairs by cell, so the
    ids within each cell stay in ascending order.

    Args:
        cells (numpy.ndarray):
            The ``(n,)`` cell id of each point.

        num_cells (int):
            The number of cells.

    Returns:
        tuple:
        A 2-tuple of the ``(num_cells + 1,)`` int64 offsets and the
        ``(n,)`` int32 ids.

    Raises:
        crisp.errors.InvalidArgumentError:
            A cell id was out of range.
    """
    cells = np.asarray(cells, dtype=np.int64)

    if len(cells) and (cells.min() < 0 or cells.max() >= num_cells):
        raise InvalidArgumentError('Cell ids must lie in [0, %d)'
                                   % num_cells)

    counts = np.bincount(cells, minlength=num_cells)
    offsets = np.zeros(num_cells + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    ids = np.argsort(cells, kind='stable').astype(np.int32)

    return offsets, ids


def build_postings(
    assignments: np.ndarray,
    num_cells: int,
) -> CsrPostingIndex:
    """Build the posting index for every subspace.

    Args:
        assignments (numpy.ndarray):
            The ``(m, n)`` cell ids of each point in each subspace.

        num_cells (int):
            The number of cells per subspace.

    Returns:
        CsrPostingIndex:
        The posting index.
    """
    m, n = assignments.shape
    offsets = np.empty((m, num_cells + 1), dtype=np.int64)
    ids = np.empty((m, n), dtype=np.int32)

    for subspace in range(m):
        offsets[subspace], ids[subspace] = build_csr(assignments[subspace],
                                                     num_cells)

    return CsrPostingIndex(offsets=offsets, ids=ids)
