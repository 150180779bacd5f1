from __future__ import annotations

from crisp.search.config import SearchConfig, SearchMode
from crisp.search.engine import (SearchResult,
                                 SearchStats,
                                 search,
                                 search_batch)
from crisp.search.scoring import (ScoreScratch,
                                  accumulate_subspace,
                                  filter_candidates)
from crisp.search.traversal import CellCursor, sorted_partial_distances
from crisp.search.verification import adsampling_verify, hamming_rerank


__all__ = [
    'CellCursor',
    'ScoreScratch',
    'SearchConfig',
    'SearchMode',
    'SearchResult',
    'SearchStats',
    'accumulate_subspace',
    'adsampling_verify',
    'filter_candidates',
    'hamming_rerank',
    'search',
    'search_batch',
    'sorted_partial_distances',
]
