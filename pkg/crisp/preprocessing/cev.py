"""Spectral correlation check.

The check measures how much of a dataset's variance is concentrated in its
leading principal components. Datasets whose energy sits in a few
directions are candidates for rotation before subspace partitioning.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError


logger = logging.getLogger(__name__)


#: The fraction of the dataset sampled for the covariance estimate.
SAMPLE_FRACTION = 0.1

#: The upper bound on the number of sampled rows.
MAX_SAMPLE_ROWS = 100_000

#: Datasets at or below this size are used whole.
MIN_SAMPLED_DATASET = 10

#: One in every TOP_COMPONENT_DIVISOR principal components counts as
#: "leading" (the top 20%).
TOP_COMPONENT_DIVISOR = 5


def sample_size(n: int) -> int:
    """Return the number of rows sampled from a dataset of size ``n``.

    Args:
        n (int):
            The dataset size.

    Returns:
        int:
        The sample size.
    """
    if n <= MIN_SAMPLED_DATASET:
        return n

    return math.ceil(min(SAMPLE_FRACTION * n, MAX_SAMPLE_ROWS))


def sample_rows(
    data: DatasetMatrix,
    seed: int,
) -> DatasetMatrix:
    """Draw a uniform sample of rows without replacement.

    The sample holds ``ceil(min(0.1 * N, 100000))`` rows, or every row if
    the dataset has 10 or fewer. Sampled rows keep their dataset order.

    Args:
        data (crisp.datasets.types.DatasetMatrix):
            The dataset to sample.

        seed (int):
            The random seed.

    Returns:
        crisp.datasets.types.DatasetMatrix:
        A copy of the sampled rows.

    Raises:
        crisp.errors.InvalidArgumentError:
            The dataset was empty.
    """
    if data.n < 1:
        raise InvalidArgumentError('Cannot sample from an empty dataset')

    size = sample_size(data.n)

    if size == data.n:
        return DatasetMatrix(data.data, copy=True)

    rng = np.random.default_rng(seed)
    rows = np.sort(rng.choice(data.n, size=size, replace=False))

    return DatasetMatrix(data.data[rows])


def covariance_eigenvalues(sample: DatasetMatrix) -> np.ndarray:
    """Return the eigenvalues of a sample's covariance matrix.

    The covariance is mean-centered with an ``n - 1`` divisor and computed
    in float64. Eigenvalues are sorted in descending order, with small
    negative values from round-off clamped to 0.

    Args:
        sample (crisp.datasets.types.DatasetMatrix):
            The sample. It must have at least 2 rows.

    Returns:
        numpy.ndarray:
        The ``(d,)`` eigenvalues.

    Raises:
        crisp.errors.InvalidArgumentError:
            The sample had fewer than 2 rows.
    """
    if sample.n < 2:
        raise InvalidArgumentError(
            'At least 2 rows are needed to estimate covariance, got %d'
            % sample.n)

    cov = np.atleast_2d(np.cov(sample.data, rowvar=False, dtype=np.float64))
    eigenvalues = np.linalg.eigvalsh(cov)[::-1]

    return np.clip(eigenvalues, 0.0, None)


def compute_cev(sample: DatasetMatrix) -> float:
    """Compute the cumulative explained variance of the leading components.

    This is the share of total variance explained by the top
    ``floor(0.2 * D)`` principal components (at least 1).

    Args:
        sample (crisp.datasets.types.DatasetMatrix):
            The sample. It must have at least 2 rows.

    Returns:
        float:
        The CEV, in ``[0, 1]``. Constant data results in 0.

    Raises:
        crisp.errors.InvalidArgumentError:
            The sample had fewer than 2 rows, or no dimensions.
    """
    if sample.d < 1:
        raise InvalidArgumentError('Cannot compute CEV of 0-dimensional data')

    eigenvalues = covariance_eigenvalues(sample)
    total = float(eigenvalues.sum())

    if total < 1e-12:
        return 0.0

    top = top_component_count(sample.d)
    cev = float(eigenvalues[:top].sum()) / total

    logger.debug('CEV over top %d of %d components: %.4f',
                 top, sample.d, cev)

    return min(1.0, cev)


def top_component_count(d: int) -> int:
    """Return how many leading components the CEV sums.

    Args:
        d (int):
            The dimensionality.

    Returns:
        int:
        ``floor(0.2 * d)``, or 1 if that would be 0.
    """
    return max(1, d // TOP_COMPONENT_DIVISOR)
