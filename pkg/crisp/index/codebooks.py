"""Per-subspace codebooks over split halves.

Each of the M subspaces is a contiguous block of ``D / M`` dimensions,
split again into a left and a right half. A codebook of K centroids is
trained independently for every half, and a point's cell in a subspace is
the pair of its nearest left and right centroids.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from crisp.errors import InvalidArgumentError
from crisp.index.kmeans import (DEFAULT_ITERATIONS,
                                kmeans,
                                squared_distances_to_centroids)


logger = logging.getLogger(__name__)


#: The default number of centroids per half.
DEFAULT_CENTROIDS = 50

#: The default cap on the number of rows used to train each codebook.
DEFAULT_TRAINING_SAMPLE = 100_000


class SubspaceCodebooks:
    """The trained centroids for every subspace half."""

    ######################
    # Instance variables #
    ######################

    #: The ``(m, k, dims_per_subspace / 2)`` float32 left-half centroids.
    centroids_left: np.ndarray

    #: The ``(m, k, dims_per_subspace / 2)`` float32 right-half centroids.
    centroids_right: np.ndarray

    #: The number of dimensions in each subspace.
    dims_per_subspace: int

    #: The number of centroids per half.
    k: int

    #: The number of subspaces.
    m: int

    def __init__(
        self,
        *,
        centroids_left: np.ndarray,
        centroids_right: np.ndarray,
    ) -> None:
        """Initialize the codebooks.

        Args:
            centroids_left (numpy.ndarray):
                The left-half centroids, shaped ``(m, k, h)``.

            centroids_right (numpy.ndarray):
                The right-half centroids, shaped ``(m, k, h)``.

        Raises:
            crisp.errors.InvalidArgumentError:
                The arrays had mismatched shapes or non-finite values.
        """
        left = np.ascontiguousarray(centroids_left, dtype=np.float32)
        right = np.ascontiguousarray(centroids_right, dtype=np.float32)

        if left.ndim != 3 or left.shape != right.shape:
            raise InvalidArgumentError(
                'Codebook halves must share an (m, k, h) shape, got %r and %r'
                % (left.shape, right.shape))

        if not (np.isfinite(left).all() and np.isfinite(right).all()):
            raise InvalidArgumentError('Codebook centroids must be finite')

        self.centroids_left = left
        self.centroids_right = right
        self.m, self.k, half = left.shape
        self.dims_per_subspace = 2 * half

    @property
    def half_dims(self) -> int:
        """The number of dimensions in each half."""
        return self.dims_per_subspace // 2

    @property
    def num_cells(self) -> int:
        """The number of cells per subspace (K²)."""
        return self.k * self.k

    @property
    def logical_bytes(self) -> int:
        """The size of all centroids, in bytes."""
        return self.centroids_left.nbytes + self.centroids_right.nbytes

    def subspace_bounds(
        self,
        m: int,
    ) -> tuple[slice, slice]:
        """Return the dimension slices of a subspace's halves.

        Args:
            m (int):
                The subspace index.

        Returns:
            tuple:
            A 2-tuple of the left and right half slices.
        """
        return subspace_bounds(m, self.dims_per_subspace)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubspaceCodebooks):
            return NotImplemented

        return (np.array_equal(self.centroids_left, other.centroids_left) and
                np.array_equal(self.centroids_right, other.centroids_right))

    def __repr__(self) -> str:
        return ('<SubspaceCodebooks m=%d k=%d dims_per_subspace=%d>'
                % (self.m, self.k, self.dims_per_subspace))


def subspace_bounds(
    m: int,
    dims_per_subspace: int,
) -> tuple[slice, slice]:
    """Return the left and right half slices of subspace ``m``.

    Args:
        m (int):
            The subspace index.

        dims_per_subspace (int):
            The number of dimensions in each subspace.

    Returns:
        tuple:
        A 2-tuple of the left and right half slices.
    """
    start = m * dims_per_subspace
    middle = start + dims_per_subspace // 2

    return slice(start, middle), slice(middle, start + dims_per_subspace)


def check_partition(
    d: int,
    m: int,
) -> int:
    """Check that ``d`` dimensions split evenly into ``m`` halved subspaces.

    Args:
        d (int):
            The dimensionality.

        m (int):
            The number of subspaces.

    Returns:
        int:
        The number of dimensions per subspace.

    Raises:
        crisp.errors.InvalidArgumentError:
            The dimensionality was not a positive multiple of ``2 * m``.
    """
    if m < 1:
        raise InvalidArgumentError('The subspace count must be >= 1, got %d'
                                   % m)

    if d < 2 * m or d % (2 * m) != 0:
        raise InvalidArgumentError(
            'D=%d is not divisible into %d subspaces of two halves each'
            % (d, m))

    return d // m


def assign_cell(
    x_sub: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
) -> int:
    """Return the cell of one subspace vector.

    Args:
        x_sub (numpy.ndarray):
            The subspace slice of a vector (both halves).

        left (numpy.ndarray):
            The ``(k, h)`` left-half centroids.

        right (numpy.ndarray):
            The ``(k, h)`` right-half centroids.

    Returns:
        int:
        ``i * k + j``, where ``i`` and ``j`` are the nearest left and right
        centroids. Ties go to the lowest centroid index.
    """
    half = left.shape[1]
    x64 = np.asarray(x_sub, dtype=np.float64)
    left_dists = ((left.astype(np.float64) - x64[:half]) ** 2).sum(axis=1)
    right_dists = ((right.astype(np.float64) - x64[half:]) ** 2).sum(axis=1)

    return int(np.argmin(left_dists)) * left.shape[0] + \
        int(np.argmin(right_dists))


def assign_cells(
    data: np.ndarray,
    codebooks: SubspaceCodebooks,
    m: int,
) -> np.ndarray:
    """Assign every row to its cell in one subspace.

    This is the vectorized form of :py:func:`assign_cell`.

    Args:
        data (numpy.ndarray):
            The ``(n, padded_d)`` stored data.

        codebooks (SubspaceCodebooks):
            The trained codebooks.

        m (int):
            The subspace index.

    Returns:
        numpy.ndarray:
        The ``(n,)`` int64 cell ids.
    """
    left_slice, right_slice = codebooks.subspace_bounds(m)
    i = np.argmin(
        squared_distances_to_centroids(data[:, left_slice],
                                       codebooks.centroids_left[m]),
        axis=1)
    j = np.argmin(
        squared_distances_to_centroids(data[:, right_slice],
                                       codebooks.centroids_right[m]),
        axis=1)

    return i.astype(np.int64) * codebooks.k + j


def train_codebooks(
    data: np.ndarray,
    m: int,
    k: int = DEFAULT_CENTROIDS,
    *,
    seed: int = 0,
    iters: int = DEFAULT_ITERATIONS,
    sample_limit: int = DEFAULT_TRAINING_SAMPLE,
    workers: int = 1,
) -> SubspaceCodebooks:
    """Train a codebook for each of the ``2 * m`` subspace halves.

    Every codebook is trained on the same row sample of at most
    ``sample_limit`` rows. Each half gets its own seed spawned from
    ``seed``, so the result does not depend on ``workers``.

    Args:
        data (numpy.ndarray):
            The ``(n, d)`` stored data. ``d`` must be divisible by ``2 * m``.

        m (int):
            The number of subspaces.

        k (int, optional):
            The number of centroids per half.

        seed (int, optional):
            The random seed.

        iters (int, optional):
            The number of Lloyd iterations.

        sample_limit (int, optional):
            The maximum number of training rows.

        workers (int, optional):
            The number of worker threads.

    Returns:
        SubspaceCodebooks:
        The trained codebooks.

    Raises:
        crisp.errors.InvalidArgumentError:
            The arguments were out of range.
    """
    n, d = data.shape
    dims = check_partition(d, m)

    if k < 1:
        raise InvalidArgumentError('K must be >= 1, got %d' % k)

    if n < k:
        raise InvalidArgumentError('N=%d is smaller than K=%d' % (n, k))

    seed_seq = np.random.SeedSequence(seed)
    sample_seq, *half_seqs = seed_seq.spawn(2 * m + 1)

    if n > sample_limit:
        rng = np.random.default_rng(sample_seq)
        rows = np.sort(rng.choice(n, size=sample_limit, replace=False))
        sample = data[rows]
    else:
        sample = data

    half = dims // 2
    left = np.empty((m, k, half), dtype=np.float32)
    right = np.empty((m, k, half), dtype=np.float32)

    def _train(index: int) -> None:
        subspace, side = divmod(index, 2)
        left_slice, right_slice = subspace_bounds(subspace, dims)
        dim_slice = right_slice if side else left_slice
        result = kmeans(sample[:, dim_slice], k, iters, half_seqs[index])
        target = right if side else left
        target[subspace] = result.centroids

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            for future in [executor.submit(_train, index)
                           for index in range(2 * m)]:
                future.result()
    else:
        for index in range(2 * m):
            _train(index)

    logger.debug('Trained %d codebooks of %d centroids on %d rows',
                 2 * m, k, sample.shape[0])

    return SubspaceCodebooks(centroids_left=left, centroids_right=right)
