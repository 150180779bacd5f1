"""Vector dataset and ground-truth containers."""

from __future__ import annotations

from typing import Optional

import numpy as np

from crisp.errors import InvalidArgumentError


class DatasetMatrix:
    """A row-major matrix of float32 vectors.

    The matrix wraps an ``(n, d)`` C-contiguous float32 array. Rows are
    vectors. The array may be modified in place by the rotation step during
    index construction; after that it's treated as read-only.
    """

    ######################
    # Instance variables #
    ######################

    #: The ``(n, d)`` float32 array of vectors.
    data: np.ndarray

    def __init__(
        self,
        data: np.ndarray,
        *,
        copy: bool = False,
    ) -> None:
        """Initialize the dataset.

        Args:
            data (numpy.ndarray):
                A 2D array of vectors. It will be converted to a C-contiguous
                float32 array if it isn't one already.

            copy (bool, optional):
                Whether to always copy the array.

        Raises:
            crisp.errors.InvalidArgumentError:
                The array was not 2D or contained non-finite values.
        """
        data = np.array(data, dtype=np.float32, order='C', copy=copy or None)

        if data.ndim != 2:
            raise InvalidArgumentError(
                'Dataset arrays must be 2D, got %d dimension(s)' % data.ndim)

        if data.size and not np.isfinite(data).all():
            raise InvalidArgumentError(
                'Dataset contains NaN or infinite values')

        self.data = data

    @classmethod
    def empty(cls) -> DatasetMatrix:
        """Return an empty dataset (n = 0, d = 0).

        Returns:
            DatasetMatrix:
            The empty dataset.
        """
        return cls(np.zeros((0, 0), dtype=np.float32))

    @property
    def n(self) -> int:
        """The number of vectors."""
        return self.data.shape[0]

    @property
    def d(self) -> int:
        """The dimensionality of the vectors."""
        return self.data.shape[1]

    def row(
        self,
        i: int,
    ) -> np.ndarray:
        """Return a view of one vector.

        Args:
            i (int):
                The row index.

        Returns:
            numpy.ndarray:
            The vector.
        """
        return self.data[i]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return '<DatasetMatrix n=%d d=%d>' % (self.n, self.d)


class GroundTruth:
    """Exact nearest-neighbor identifiers for a set of queries.

    Each row holds the ``k`` nearest vector IDs for one query, sorted by
    ascending true distance.
    """

    ######################
    # Instance variables #
    ######################

    #: The ``(q, k)`` int32 array of neighbor IDs.
    ids: np.ndarray

    #: The matching ``(q, k)`` squared distances, if known.
    distances: Optional[np.ndarray]

    def __init__(
        self,
        ids: np.ndarray,
        *,
        distances: Optional[np.ndarray] = None,
    ) -> None:
        """Initialize the ground truth.

        Args:
            ids (numpy.ndarray):
                The ``(q, k)`` array of neighbor IDs.

            distances (numpy.ndarray, optional):
                The matching ``(q, k)`` squared distances.

        Raises:
            crisp.errors.InvalidArgumentError:
                The arrays had the wrong shape.
        """
        ids = np.ascontiguousarray(ids, dtype=np.int32)

        if ids.ndim != 2:
            raise InvalidArgumentError(
                'Ground truth IDs must be 2D, got %d dimension(s)'
                % ids.ndim)

        if distances is not None:
            distances = np.ascontiguousarray(distances, dtype=np.float32)

            if distances.shape != ids.shape:
                raise InvalidArgumentError(
                    'Ground truth distances have shape %r, expected %r'
                    % (distances.shape, ids.shape))

        self.ids = ids
        self.distances = distances

    @property
    def q(self) -> int:
        """The number of queries."""
        return self.ids.shape[0]

    @property
    def k(self) -> int:
        """The number of neighbors per query."""
        return self.ids.shape[1]

    def validate(
        self,
        n: int,
    ) -> None:
        """Check the ground truth against a dataset size.

        Args:
            n (int):
                The number of vectors in the dataset.

        Raises:
            crisp.errors.InvalidArgumentError:
                An ID was out of range or repeated within a row.
        """
        if self.ids.size == 0:
            return

        if self.ids.min() < 0 or self.ids.max() >= n:
            raise InvalidArgumentError(
                'Ground truth IDs must be in [0, %d)' % n)

        sorted_ids = np.sort(self.ids, axis=1)

        if (sorted_ids[:, 1:] == sorted_ids[:, :-1]).any():
            raise InvalidArgumentError(
                'Ground truth rows must not contain duplicate IDs')

    def __repr__(self) -> str:
        return '<GroundTruth q=%d k=%d>' % (self.q, self.k)
