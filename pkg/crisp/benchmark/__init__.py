from __future__ import annotations

from crisp.benchmark.pareto import (min_build_time_table,
                                    pareto_front)
from crisp.benchmark.report import (BenchReport,
                                    evaluate_config,
                                    write_csv)


__all__ = [
    'BenchReport',
    'evaluate_config',
    'min_build_time_table',
    'pareto_front',
    'write_csv',
]
