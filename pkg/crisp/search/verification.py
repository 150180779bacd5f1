"""Candidate verification.

Candidates are either verified exactly, or first re-ranked by the Hamming
distance of their sign codes and then checked with ADSampling, which stops
accumulating a distance as soon as the partial sum shows, with high
probability, that the candidate can't make the current top-k.
"""

from __future__ import annotations

import functools
import math
from typing import Optional

import numpy as np

from crisp.index.binary import hamming_distances


def hamming_rerank(
    candidates: np.ndarray,
    q_code: np.ndarray,
    codes: np.ndarray,
) -> np.ndarray:
    """Sort candidates by the Hamming distance of their codes to the query's.

    The sort is stable, so candidates at equal distance keep their order.

    Args:
        candidates (numpy.ndarray):
            The candidate ids.

        q_code (numpy.ndarray):
            The query's packed sign code.

        codes (numpy.ndarray):
            The packed sign codes of every indexed point.

    Returns:
        numpy.ndarray:
        The reordered candidate ids.
    """
    if len(candidates) == 0:
        return candidates

    dists = hamming_distances(q_code, codes[candidates])

    return candidates[np.argsort(dists, kind='stable')]


@functools.lru_cache(maxsize=64)
def _checkpoints(
    d: int,
    stride: int,
    eps0: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Return the check dimensions and their threshold multipliers.

    Checks happen at every multiple of ``stride`` below ``d``. The
    multiplier at dimension ``t`` is ``(t / d) * (1 + eps0 / sqrt(t))²``.
    """
    dims = np.arange(stride, d, stride, dtype=np.int64)
    ratios = (dims / d) * (1.0 + eps0 / np.sqrt(dims)) ** 2
    dims.setflags(write=False)
    ratios.setflags(write=False)

    return dims, ratios


def adsampling_verify(
    q: np.ndarray,
    x: np.ndarray,
    r_k_sq: float,
    eps0: float,
    stride: int,
) -> tuple[Optional[float], int]:
    """Compute a squared distance, giving up early if it's hopeless.

    Squared differences are accumulated in dimension order. At every
    multiple ``t`` of ``stride`` below ``D``, the candidate is pruned if the
    partial sum exceeds ``r_k_sq * (t / D) * (1 + eps0 / sqrt(t))²``.

    Args:
        q (numpy.ndarray):
            The prepared query.

        x (numpy.ndarray):
            The stored vector.

        r_k_sq (float):
            The current k-th best squared distance. Infinity disables
            pruning.

        eps0 (float):
            The safety margin.

        stride (int):
            The number of dimensions between checks.

    Returns:
        tuple:
        A 2-tuple in the form of:

        Tuple:
            0 (float):
                The exact squared distance, or ``None`` if pruned.

            1 (int):
                The number of dimensions scanned.
    """
    d = q.shape[0]
    diff = x.astype(np.float64) - q.astype(np.float64)

    if math.isinf(r_k_sq):
        return float(np.dot(diff, diff)), d

    dims, ratios = _checkpoints(d, stride, eps0)
    partial = 0.0
    scanned = 0

    for t, ratio in zip(dims.tolist(), ratios.tolist()):
        chunk = diff[scanned:t]
        partial += float(np.dot(chunk, chunk))
        scanned = t

        if partial > r_k_sq * ratio:
            return None, scanned

    rest = diff[scanned:]

    return partial + float(np.dot(rest, rest)), d
