"""Deterministic synthetic datasets for testing and benchmarking.

These stand in for real embedding collections at desk scale. Each
generator takes an explicit seed, and returns the same vectors for the same
arguments.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError


def isotropic(
    n: int,
    d: int,
    *,
    seed: int = 0,
) -> DatasetMatrix:
    """Generate standard Gaussian vectors with equal variance on every axis.

    Args:
        n (int):
            The number of vectors.

        d (int):
            The dimensionality.

        seed (int, optional):
            The random seed.

    Returns:
        crisp.datasets.types.DatasetMatrix:
        The generated dataset.
    """
    rng = np.random.default_rng(seed)

    return DatasetMatrix(rng.standard_normal((n, d), dtype=np.float32))


def axis_concentrated(
    n: int,
    d: int,
    *,
    active_dims: int = 1,
    noise: float = 0.0,
    seed: int = 0,
) -> DatasetMatrix:
    """Generate vectors whose variance lives in the first few axes.

    Args:
        n (int):
            The number of vectors.

        d (int):
            The dimensionality.

        active_dims (int, optional):
            The number of leading axes carrying unit variance.

        noise (float, optional):
            The standard deviation of the remaining axes.

        seed (int, optional):
            The random seed.

    Returns:
        crisp.datasets.types.DatasetMatrix:
        The generated dataset.
    """
    if not 1 <= active_dims <= d:
        raise InvalidArgumentError(
            'active_dims must be between 1 and %d, got %d'
            % (d, active_dims))

    rng = np.random.default_rng(seed)
    data = np.zeros((n, d), dtype=np.float32)
    data[:, :active_dims] = rng.standard_normal((n, active_dims))

    if noise > 0:
        data[:, active_dims:] = noise * rng.standard_normal(
            (n, d - active_dims))

    return DatasetMatrix(data)


def correlated(
    n: int,
    d: int,
    *,
    rank: int = 4,
    noise: float = 0.05,
    seed: int = 0,
) -> DatasetMatrix:
    """Generate vectors from a low-rank latent space mixed into all axes.

    A ``rank``-dimensional Gaussian latent vector is projected through a
    fixed random ``(rank, d)`` mixing matrix and perturbed with isotropic
    noise. Nearly all of the variance is concentrated in a handful of
    principal components, but it's spread over every coordinate axis.

    Args:
        n (int):
            The number of vectors.

        d (int):
            The dimensionality.

        rank (int, optional):
            The latent dimensionality.

        noise (float, optional):
            The standard deviation of the additive noise.

        seed (int, optional):
            The random seed.

    Returns:
        crisp.datasets.types.DatasetMatrix:
        The generated dataset.
    """
    rng = np.random.default_rng(seed)

    # Drawn from its own stream so the latent space depends only on the seed.
    mixing = np.random.default_rng([seed, 0x5eed]).standard_normal((rank, d))
    latent = rng.standard_normal((n, rank))
    data = latent @ mixing + noise * rng.standard_normal((n, d))

    return DatasetMatrix(data.astype(np.float32))


def clustered(
    n: int,
    d: int,
    *,
    clusters: int = 8,
    spread: float = 0.1,
    seed: int = 0,
) -> DatasetMatrix:
    """Generate vectors around well-separated random cluster centers.

    Args:
        n (int):
            The number of vectors.

        d (int):
            The dimensionality.

        clusters (int, optional):
            The number of clusters.

        spread (float, optional):
            The standard deviation around each center.

        seed (int, optional):
            The random seed.

    Returns:
        crisp.datasets.types.DatasetMatrix:
        The generated dataset.
    """
    rng = np.random.default_rng(seed)
    centers = np.random.default_rng([seed, 0xc105]).standard_normal(
        (clusters, d)) * 4.0
    labels = rng.integers(0, clusters, size=n)
    data = centers[labels] + spread * rng.standard_normal((n, d))

    return DatasetMatrix(data.astype(np.float32))


#: Generators by name, for the ``generate`` command.
GENERATORS: dict[str, Callable[..., DatasetMatrix]] = {
    'isotropic': isotropic,
    'axis-concentrated': axis_concentrated,
    'correlated': correlated,
    'clustered': clustered,
}


def generate_base_and_queries(
    kind: str,
    *,
    n: int,
    queries: int,
    d: int,
    seed: int = 0,
    **kwargs,
) -> tuple[DatasetMatrix, DatasetMatrix]:
    """Generate a base set and a held-out query set from one distribution.

    Args:
        kind (str):
            The generator name (a key in :py:data:`GENERATORS`).

        n (int):
            The number of base vectors.

        queries (int):
            The number of query vectors.

        d (int):
            The dimensionality.

        seed (int, optional):
            The random seed.

        **kwargs (dict):
            Extra arguments for the generator.

    Returns:
        tuple:
        A 2-tuple of ``(base, queries)`` datasets.

    Raises:
        crisp.errors.InvalidArgumentError:
            The generator name was unknown.
    """
    try:
        generator = GENERATORS[kind]
    except KeyError:
        raise InvalidArgumentError(
            'Unknown dataset kind "%s". Expected one of: %s'
            % (kind, ', '.join(sorted(GENERATORS))))

    combined = generator(n + queries, d, seed=seed, **kwargs)

    return (DatasetMatrix(combined.data[:n]),
            DatasetMatrix(combined.data[n:]))
