from __future__ import annotations

from crisp.index.binary import binarize, binarize_rows, hamming_distances
from crisp.index.builder import CrispIndex, build_index, index_logical_bytes
from crisp.index.codebooks import SubspaceCodebooks, assign_cell
from crisp.index.kmeans import kmeans
from crisp.index.postings import CsrPostingIndex
from crisp.index.storage import load_index, save_index


__all__ = [
    'CrispIndex',
    'CsrPostingIndex',
    'SubspaceCodebooks',
    'assign_cell',
    'binarize',
    'binarize_rows',
    'build_index',
    'hamming_distances',
    'index_logical_bytes',
    'kmeans',
    'load_index',
    'save_index',
]
