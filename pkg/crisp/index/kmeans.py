"""Lloyd's k-means with k-means++ seeding."""

from __future__ import annotations

import logging
from typing import Optional, Union

import numpy as np

from crisp.errors import InvalidArgumentError


logger = logging.getLogger(__name__)


#: The default number of Lloyd iterations.
DEFAULT_ITERATIONS = 20

#: Rough cap on the float64 elements of one distance block.
_BLOCK_ELEMENTS = 1 << 22


SeedLike = Union[int, np.random.SeedSequence]


def squared_distances_to_centroids(
    points: np.ndarray,
    centroids: np.ndarray,
) -> np.ndarray:
    """Return squared distances between every point and every centroid.

    Differences are taken directly in float64 (rather than through the
    norm expansion), so exact ties stay exact.

    Args:
        points (numpy.ndarray):
            The ``(n, h)`` points.

        centroids (numpy.ndarray):
            The ``(k, h)`` centroids.

    Returns:
        numpy.ndarray:
        The ``(n, k)`` float64 squared distances.
    """
    n, h = points.shape
    k = centroids.shape[0]
    out = np.empty((n, k), dtype=np.float64)
    centroids64 = centroids.astype(np.float64)
    step = max(1, _BLOCK_ELEMENTS // max(1, k * h))

    for start in range(0, n, step):
        block = points[start:start + step].astype(np.float64)
        diff = block[:, None, :] - centroids64[None, :, :]
        out[start:start + step] = np.einsum('ijk,ijk->ij', diff, diff)

    return out


class KMeansResult:
    """The outcome of a k-means run."""

    ######################
    # Instance variables #
    ######################

    #: The ``(k, h)`` float32 centroids.
    centroids: np.ndarray

    #: The final assignment of each point to a centroid.
    labels: np.ndarray

    #: The objective (sum of squared distances) after each assignment step.
    objectives: list[float]

    def __init__(
        self,
        *,
        centroids: np.ndarray,
        labels: np.ndarray,
        objectives: list[float],
    ) -> None:
        self.centroids = centroids
        self.labels = labels
        self.objectives = objectives


def kmeans_plusplus_init(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Choose initial centroids with k-means++ seeding.

    Once every distinct point has been chosen, any further centroids
    duplicate existing points.

    Args:
        points (numpy.ndarray):
            The ``(n, h)`` points.

        k (int):
            The number of centroids.

        rng (numpy.random.Generator):
            The random generator.

    Returns:
        numpy.ndarray:
        The ``(k, h)`` float64 initial centroids.
    """
    n = points.shape[0]
    points64 = points.astype(np.float64)
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    centroids[0] = points64[rng.integers(0, n)]
    closest = squared_distances_to_centroids(points64, centroids[:1])[:, 0]

    for i in range(1, k):
        total = closest.sum()

        if total > 0:
            next_idx = rng.choice(n, p=closest / total)
        else:
            next_idx = rng.integers(0, n)

        centroids[i] = points64[next_idx]
        np.minimum(closest,
                   squared_distances_to_centroids(points64,
                                                  centroids[i:i + 1])[:, 0],
                   out=closest)

    return centroids


def kmeans(
    points: np.ndarray,
    k: int,
    iters: int = DEFAULT_ITERATIONS,
    seed: SeedLike = 0,
) -> KMeansResult:
    """Cluster points with Lloyd's algorithm.

    Centroids are seeded with k-means++. Iteration stops after ``iters``
    rounds, or early once no assignment changes. A cluster that ends up
    empty is re-seeded at the point farthest from its current centroid.
    Assignment ties go to the lowest centroid index.

    Args:
        points (numpy.ndarray):
            The ``(n, h)`` points.

        k (int):
            The number of centroids.

        iters (int, optional):
            The maximum number of Lloyd iterations.

        seed (int or numpy.random.SeedSequence, optional):
            The random seed.

    Returns:
        KMeansResult:
        The centroids, labels, and objective history.

    Raises:
        crisp.errors.InvalidArgumentError:
            There were no points, or ``k`` was less than 1.
    """
    points = np.asarray(points)

    if points.ndim != 2 or points.shape[0] == 0:
        raise InvalidArgumentError('k-means needs at least one point')

    if k < 1:
        raise InvalidArgumentError('k-means needs k >= 1, got %d' % k)

    rng = np.random.default_rng(seed)
    points64 = points.astype(np.float64)
    centroids = kmeans_plusplus_init(points64, k, rng)
    labels: Optional[np.ndarray] = None
    objectives: list[float] = []

    for iteration in range(max(1, iters)):
        dists = squared_distances_to_centroids(points64, centroids)
        new_labels = np.argmin(dists, axis=1)
        point_dists = dists[np.arange(len(new_labels)), new_labels]
        objectives.append(float(point_dists.sum()))

        if labels is not None and np.array_equal(labels, new_labels):
            break

        labels = new_labels

        if iteration == iters - 1:
            break

        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, points64)
        nonempty = counts > 0
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]

        for empty in np.flatnonzero(~nonempty):
            # Recompute against the updated centroids so the farthest point
            # is measured from where it currently belongs.
            residuals = ((points64 - centroids[labels]) ** 2).sum(axis=1)
            farthest = int(np.argmax(residuals))

            if residuals[farthest] <= 0:
                break

            centroids[empty] = points64[farthest]
            labels[farthest] = empty

    assert labels is not None

    logger.debug('k-means (n=%d, k=%d) finished after %d iteration(s), '
                 'objective %.6g',
                 points.shape[0], k, len(objectives), objectives[-1])

    return KMeansResult(centroids=centroids.astype(np.float32),
                        labels=labels,
                        objectives=objectives)
