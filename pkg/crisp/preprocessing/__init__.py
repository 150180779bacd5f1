from __future__ import annotations

from crisp.preprocessing.cev import compute_cev, sample_rows
from crisp.preprocessing.rotation import (DEFAULT_TAU_CEV,
                                          RotationPolicy,
                                          RotationRecord,
                                          generate_rotation,
                                          maybe_rotate,
                                          rotate_query)


__all__ = [
    'DEFAULT_TAU_CEV',
    'RotationPolicy',
    'RotationRecord',
    'compute_cev',
    'generate_rotation',
    'maybe_rotate',
    'rotate_query',
    'sample_rows',
]
