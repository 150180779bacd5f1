from __future__ import annotations

from crisp.theory.bounds import (BoundInput,
                                 exact_binomial_failure,
                                 hoeffding_recall_bound,
                                 simulate_collision_retrieval,
                                 theory_rows)
from crisp.theory.collisions import (MeasuredTheoryRow,
                                     estimate_p_star,
                                     measured_theory_rows,
                                     nearest_neighbor_collisions)


__all__ = [
    'BoundInput',
    'estimate_p_star',
    'exact_binomial_failure',
    'hoeffding_recall_bound',
    'MeasuredTheoryRow',
    'measured_theory_rows',
    'nearest_neighbor_collisions',
    'simulate_collision_retrieval',
    'theory_rows',
]
