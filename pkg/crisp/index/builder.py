"""Index construction."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np

from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError
from crisp.index.binary import binarize, binarize_rows
from crisp.index.codebooks import (DEFAULT_CENTROIDS,
                                   DEFAULT_TRAINING_SAMPLE,
                                   SubspaceCodebooks,
                                   assign_cells,
                                   check_partition,
                                   train_codebooks)
from crisp.index.kmeans import DEFAULT_ITERATIONS
from crisp.index.postings import CsrPostingIndex, build_postings
from crisp.preprocessing.rotation import (DEFAULT_TAU_CEV,
                                          RotationPolicy,
                                          RotationRecord,
                                          maybe_rotate,
                                          rotate_query)


logger = logging.getLogger(__name__)


class CrispIndex:
    """A built, immutable index over a stored dataset.

    The stored data lives in the (possibly rotated) space the codebooks were
    trained in, padded with zero dimensions up to ``padded_d``. Queries go
    through :py:meth:`prepare_query` to reach the same space.
    """

    ######################
    # Instance variables #
    ######################

    #: The ``(n, ceil(padded_d / 64))`` uint64 sign codes of the stored data.
    binary_codes: np.ndarray

    #: The trained subspace codebooks.
    codebooks: SubspaceCodebooks

    #: The stored, possibly rotated and padded, vectors.
    data: DatasetMatrix

    #: The dimensionality of the vectors before padding.
    original_d: int

    #: The per-subspace posting lists.
    postings: CsrPostingIndex

    #: The rotation decision.
    rotation: RotationRecord

    def __init__(
        self,
        *,
        rotation: RotationRecord,
        codebooks: SubspaceCodebooks,
        postings: CsrPostingIndex,
        binary_codes: np.ndarray,
        data: DatasetMatrix,
        original_d: int,
    ) -> None:
        """Initialize the index.

        Args:
            rotation (crisp.preprocessing.rotation.RotationRecord):
                The rotation decision.

            codebooks (crisp.index.codebooks.SubspaceCodebooks):
                The trained codebooks.

            postings (crisp.index.postings.CsrPostingIndex):
                The posting lists.

            binary_codes (numpy.ndarray):
                The packed sign codes of the stored data.

            data (crisp.datasets.types.DatasetMatrix):
                The stored data.

            original_d (int):
                The dimensionality before padding.

        Raises:
            crisp.errors.InvalidArgumentError:
                The components disagree on N, D, or M.
        """
        padded_d = data.d

        if (postings.n != data.n or
            binary_codes.shape[0] != data.n or
            postings.m != codebooks.m or
            postings.num_cells != codebooks.num_cells or
            codebooks.m * codebooks.dims_per_subspace != padded_d or
            not (0 < original_d <= padded_d) or
            rotation.d != original_d):
            raise InvalidArgumentError('Index components are inconsistent')

        self.rotation = rotation
        self.codebooks = codebooks
        self.postings = postings
        self.binary_codes = np.ascontiguousarray(binary_codes,
                                                 dtype=np.uint64)
        self.data = data
        self.original_d = original_d

    @property
    def n(self) -> int:
        """The number of indexed vectors."""
        return self.data.n

    @property
    def padded_d(self) -> int:
        """The stored dimensionality, including zero padding."""
        return self.data.d

    @property
    def m(self) -> int:
        """The number of subspaces."""
        return self.codebooks.m

    @property
    def k(self) -> int:
        """The number of centroids per half."""
        return self.codebooks.k

    def prepare_query(
        self,
        q: np.ndarray,
    ) -> np.ndarray:
        """Move a query into the stored space.

        The query is rotated if the index was rotated, then zero-padded.

        Args:
            q (numpy.ndarray):
                The ``(original_d,)`` query.

        Returns:
            numpy.ndarray:
            The ``(padded_d,)`` float32 query.

        Raises:
            crisp.errors.InvalidArgumentError:
                The query had the wrong dimension.
        """
        rotated = rotate_query(q, self.rotation)

        if self.padded_d == self.original_d:
            return rotated

        padded = np.zeros(self.padded_d, dtype=np.float32)
        padded[:self.original_d] = rotated

        return padded

    def query_code(
        self,
        prepared_q: np.ndarray,
    ) -> np.ndarray:
        """Return the sign code of a prepared query.

        Args:
            prepared_q (numpy.ndarray):
                The output of :py:meth:`prepare_query`.

        Returns:
            numpy.ndarray:
            The uint64 code.
        """
        return binarize(prepared_q)

    def describe(self) -> dict[str, Any]:
        """Return a summary of the index for reports.

        Returns:
            dict:
            The index's shape, rotation decision, and logical size.
        """
        return {
            'n': self.n,
            'd': self.original_d,
            'padded_d': self.padded_d,
            'm': self.m,
            'k': self.k,
            'rotated': self.rotation.applied,
            'cev': self.rotation.cev,
            'logical_bytes': index_logical_bytes(self),
        }

    def __repr__(self) -> str:
        return ('<CrispIndex n=%d d=%d padded_d=%d m=%d k=%d rotated=%s>'
                % (self.n, self.original_d, self.padded_d, self.m, self.k,
                   self.rotation.applied))


def padded_dimension(
    d: int,
    m: int,
) -> int:
    """Return the smallest multiple of ``2 * m`` that is at least ``d``.

    Args:
        d (int):
            The dimensionality.

        m (int):
            The number of subspaces.

    Returns:
        int:
        The padded dimensionality.
    """
    step = 2 * m

    return -(-d // step) * step


def build_index(
    data: DatasetMatrix,
    m: int,
    k: int = DEFAULT_CENTROIDS,
    tau_cev: float = DEFAULT_TAU_CEV,
    seed: int = 0,
    *,
    policy: RotationPolicy = RotationPolicy.ADAPTIVE,
    pad: bool = True,
    kmeans_iters: int = DEFAULT_ITERATIONS,
    kmeans_sample: int = DEFAULT_TRAINING_SAMPLE,
    workers: int = 1,
    copy: bool = False,
) -> CrispIndex:
    """Build an index over a dataset.

    The dataset is checked for rotation (and rotated in place, unless
    ``copy`` is set), padded if needed, split into ``m`` subspaces, and
    clustered per half. Every point is then assigned a cell per subspace and
    the assignments are laid out as CSR posting lists.

    Args:
        data (crisp.datasets.types.DatasetMatrix):
            The dataset.

        m (int):
            The number of subspaces.

        k (int, optional):
            The number of centroids per half.

        tau_cev (float, optional):
            The CEV threshold for the adaptive rotation policy.

        seed (int, optional):
            The random seed for every randomized step.

        policy (crisp.preprocessing.rotation.RotationPolicy, optional):
            When to rotate.

        pad (bool, optional):
            Whether to zero-pad dimensions that don't split evenly into
            ``2 * m``.

        kmeans_iters (int, optional):
            The number of Lloyd iterations per codebook.

        kmeans_sample (int, optional):
            The maximum number of rows used to train each codebook.

        workers (int, optional):
            The number of worker threads.

        copy (bool, optional):
            Whether to leave ``data`` untouched by working on a copy.

    Returns:
        CrispIndex:
        The built index.

    Raises:
        crisp.errors.InvalidArgumentError:
            The arguments were out of range, or the dimensions don't split
            evenly and padding was disabled.
    """
    if m < 1:
        raise InvalidArgumentError('M must be >= 1, got %d' % m)

    if k < 1:
        raise InvalidArgumentError('K must be >= 1, got %d' % k)

    if data.n < k:
        raise InvalidArgumentError('N=%d is smaller than K=%d' % (data.n, k))

    d = data.d

    if d < 1:
        raise InvalidArgumentError('Cannot index 0-dimensional vectors')

    padded_d = padded_dimension(d, m)

    if padded_d != d and not pad:
        check_partition(d, m)

    if copy:
        data = DatasetMatrix(data.data, copy=True)

    start = time.perf_counter()
    rotation = maybe_rotate(data, tau_cev, seed, policy=policy,
                            workers=workers)
    rotate_done = time.perf_counter()

    if padded_d != d:
        logger.info('Padding D=%d to %d for %d subspaces', d, padded_d, m)
        padded = np.zeros((data.n, padded_d), dtype=np.float32)
        padded[:, :d] = data.data
        stored = DatasetMatrix(padded)
    else:
        stored = data

    codebooks = train_codebooks(stored.data, m, k,
                                seed=seed,
                                iters=kmeans_iters,
                                sample_limit=kmeans_sample,
                                workers=workers)
    train_done = time.perf_counter()

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            assignments = np.stack(list(executor.map(
                lambda subspace: assign_cells(stored.data, codebooks,
                                              subspace),
                range(m))))
    else:
        assignments = np.stack([
            assign_cells(stored.data, codebooks, subspace)
            for subspace in range(m)
        ])

    postings = build_postings(assignments, codebooks.num_cells)
    binary_codes = binarize_rows(stored.data)
    end = time.perf_counter()

    if logger.isEnabledFor(logging.DEBUG):
        for subspace in range(m):
            sizes = postings.cell_sizes(subspace)
            logger.debug('Subspace %d: %d non-empty cells, largest %d, '
                         'mean %.1f',
                         subspace, np.count_nonzero(sizes), sizes.max(),
                         sizes.mean())

    logger.info('Built index over N=%d, D=%d with M=%d, K=%d in %.2fs '
                '(rotation %.2fs, codebooks %.2fs, postings %.2fs)',
                stored.n, d, m, k, end - start,
                rotate_done - start, train_done - rotate_done,
                end - train_done)

    return CrispIndex(rotation=rotation,
                      codebooks=codebooks,
                      postings=postings,
                      binary_codes=binary_codes,
                      data=stored,
                      original_d=d)


def index_logical_bytes(index: CrispIndex) -> int:
    """Return the exact logical size of an index's arrays.

    This counts the stored data, the posting ids and offsets, the codebooks,
    the binary codes, and the rotation matrix if one was applied.

    Args:
        index (CrispIndex):
            The index.

    Returns:
        int:
        The size in bytes.
    """
    n = index.n
    d = index.padded_d
    m = index.m
    words = index.binary_codes.shape[1]

    total = (4 * n * d +
             4 * m * n +
             8 * m * (index.codebooks.num_cells + 1) +
             index.codebooks.logical_bytes +
             8 * words * n)

    if index.rotation.applied:
        total += 4 * index.original_d * index.original_d

    return total
