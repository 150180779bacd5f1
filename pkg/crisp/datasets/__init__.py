from __future__ import annotations

from crisp.datasets.groundtruth import brute_force_knn, recall_at_k
from crisp.datasets.io import load_fvecs, load_ivecs, save_fvecs, save_ivecs
from crisp.datasets.types import DatasetMatrix, GroundTruth


__all__ = [
    'DatasetMatrix',
    'GroundTruth',
    'brute_force_knn',
    'load_fvecs',
    'load_ivecs',
    'recall_at_k',
    'save_fvecs',
    'save_ivecs',
]
