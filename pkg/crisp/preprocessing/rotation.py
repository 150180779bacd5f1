"""Adaptive randomized orthogonal rotation."""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError
from crisp.preprocessing.cev import compute_cev, sample_rows


logger = logging.getLogger(__name__)


#: The default CEV threshold above which data is rotated.
DEFAULT_TAU_CEV = 0.85


class RotationPolicy(str, enum.Enum):
    """When to rotate a dataset before indexing."""

    #: Rotate only when the CEV exceeds the threshold.
    ADAPTIVE = 'adaptive'

    #: Always rotate.
    ALWAYS = 'always'

    #: Never rotate.
    NEVER = 'never'


class RotationRecord:
    """The outcome of the rotation decision for an index.

    This is persisted with the index, so queries can be moved into the
    same space as the stored data.
    """

    ######################
    # Instance variables #
    ######################

    #: Whether the rotation was applied to the data.
    applied: bool

    #: The measured CEV of the dataset sample.
    cev: float

    #: The dimensionality.
    d: int

    #: The ``(d, d)`` float32 orthogonal matrix, present iff applied.
    matrix: Optional[np.ndarray]

    #: The random seed used for sampling and rotation.
    seed: int

    def __init__(
        self,
        *,
        d: int,
        cev: float,
        applied: bool,
        seed: int,
        matrix: Optional[np.ndarray] = None,
    ) -> None:
        """Initialize the record.

        Args:
            d (int):
                The dimensionality.

            cev (float):
                The measured CEV.

            applied (bool):
                Whether the rotation was applied.

            seed (int):
                The random seed.

            matrix (numpy.ndarray, optional):
                The rotation matrix. This is required if ``applied`` is set.

        Raises:
            crisp.errors.InvalidArgumentError:
                The matrix was missing, unexpected, or the wrong shape.
        """
        if applied:
            if matrix is None or matrix.shape != (d, d):
                raise InvalidArgumentError(
                    'An applied rotation needs a %d x %d matrix' % (d, d))

            matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        elif matrix is not None:
            raise InvalidArgumentError(
                'A bypassed rotation must not carry a matrix')

        self.d = d
        self.cev = float(cev)
        self.applied = bool(applied)
        self.seed = int(seed)
        self.matrix = matrix

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RotationRecord):
            return NotImplemented

        return (self.d == other.d and
                self.cev == other.cev and
                self.applied == other.applied and
                self.seed == other.seed and
                ((self.matrix is None and other.matrix is None) or
                 (self.matrix is not None and other.matrix is not None and
                  np.array_equal(self.matrix, other.matrix))))

    def __repr__(self) -> str:
        return ('<RotationRecord d=%d cev=%.4f applied=%s seed=%d>'
                % (self.d, self.cev, self.applied, self.seed))


def generate_rotation(
    d: int,
    seed: int,
) -> np.ndarray:
    """Generate a random orthogonal matrix.

    A ``(d, d)`` standard Gaussian matrix is QR-factored, and the columns of
    Q are sign-flipped so the R factor has a positive diagonal. That makes
    the result Haar-distributed and independent of the LAPACK sign
    convention.

    Args:
        d (int):
            The dimensionality.

        seed (int):
            The random seed.

    Returns:
        numpy.ndarray:
        The ``(d, d)`` float64 orthogonal matrix.

    Raises:
        crisp.errors.InvalidArgumentError:
            The dimensionality was less than 1.
    """
    if d < 1:
        raise InvalidArgumentError('Rotation dimension must be >= 1, got %d'
                                   % d)

    rng = np.random.default_rng(seed)
    gaussian = rng.standard_normal((d, d))
    q, r = np.linalg.qr(gaussian)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0

    return q * signs


def apply_rotation_in_place(
    data: np.ndarray,
    matrix: np.ndarray,
    *,
    workers: int = 1,
) -> None:
    """Replace every row ``x`` of ``data`` with ``x @ matrix``.

    Rows are transformed one at a time through a scratch buffer of ``d``
    floats per worker, so no second copy of the dataset is ever allocated.

    Args:
        data (numpy.ndarray):
            The ``(n, d)`` float32 C-contiguous array to transform.

        matrix (numpy.ndarray):
            The ``(d, d)`` float32 rotation matrix.

        workers (int, optional):
            The number of worker threads. Each owns a contiguous range of
            rows.
    """
    n = data.shape[0]

    def _rotate_range(start: int, end: int) -> None:
        scratch = np.empty(data.shape[1], dtype=np.float32)

        for i in range(start, end):
            row = data[i]
            np.dot(row, matrix, out=scratch)
            row[:] = scratch

    if workers > 1 and n > workers:
        bounds = np.linspace(0, n, workers + 1).astype(int)

        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = [
                executor.submit(_rotate_range, int(bounds[w]),
                                int(bounds[w + 1]))
                for w in range(workers)
            ]

            for future in futures:
                future.result()
    else:
        _rotate_range(0, n)


def maybe_rotate(
    data: DatasetMatrix,
    tau_cev: float = DEFAULT_TAU_CEV,
    seed: int = 0,
    *,
    policy: RotationPolicy = RotationPolicy.ADAPTIVE,
    workers: int = 1,
) -> RotationRecord:
    """Measure the dataset's CEV and rotate it in place if warranted.

    With the adaptive policy, the rotation is applied when the CEV of a
    row sample strictly exceeds ``tau_cev``. The other policies force the
    decision, but still measure and record the CEV.

    Args:
        data (crisp.datasets.types.DatasetMatrix):
            The dataset. This is modified in place if rotated.

        tau_cev (float, optional):
            The CEV threshold.

        seed (int, optional):
            The random seed for sampling and rotation.

        policy (RotationPolicy, optional):
            When to rotate.

        workers (int, optional):
            The number of worker threads for applying the rotation.

    Returns:
        RotationRecord:
        The rotation decision and matrix.

    Raises:
        crisp.errors.InvalidArgumentError:
            The dataset was empty.
    """
    if data.n < 1:
        raise InvalidArgumentError('Cannot preprocess an empty dataset')

    policy = RotationPolicy(policy)
    sample = sample_rows(data, seed)

    if sample.n >= 2:
        cev = compute_cev(sample)
    else:
        cev = 0.0

    if policy == RotationPolicy.ADAPTIVE:
        applied = cev > tau_cev
    else:
        applied = policy == RotationPolicy.ALWAYS

    logger.info('Spectral check: CEV=%.4f over %d sampled rows '
                '(threshold %.2f, policy %s) -> %s',
                cev, sample.n, tau_cev, policy.value,
                'rotating' if applied else 'bypassing rotation')

    if not applied:
        return RotationRecord(d=data.d, cev=cev, applied=False, seed=seed)

    matrix = generate_rotation(data.d, seed).astype(np.float32)
    apply_rotation_in_place(data.data, matrix, workers=workers)

    return RotationRecord(d=data.d, cev=cev, applied=True, seed=seed,
                          matrix=matrix)


def rotate_query(
    q: np.ndarray,
    record: RotationRecord,
) -> np.ndarray:
    """Move a query into the space of the stored data.

    Args:
        q (numpy.ndarray):
            The ``(d,)`` query.

        record (RotationRecord):
            The index's rotation record.

    Returns:
        numpy.ndarray:
        The rotated float32 query, or the query unchanged if no rotation was
        applied.

    Raises:
        crisp.errors.InvalidArgumentError:
            The query had the wrong dimension.
    """
    q = np.asarray(q, dtype=np.float32)

    if q.shape != (record.d,):
        raise InvalidArgumentError(
            'Query has shape %r, expected (%d,)' % (q.shape, record.d))

    if not record.applied:
        return q

    assert record.matrix is not None

    return np.dot(q, record.matrix)
