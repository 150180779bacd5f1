"""Benchmark reports for search configurations."""

from __future__ import annotations

import csv
import logging
import time
from typing import IO, Any, Iterable, Optional, Sequence

import numpy as np
from typing_extensions import TypedDict

from crisp.datasets.groundtruth import recall_at_k
from crisp.datasets.types import DatasetMatrix, GroundTruth
from crisp.index.builder import CrispIndex, index_logical_bytes
from crisp.search.config import SearchConfig
from crisp.search.engine import search_batch


logger = logging.getLogger(__name__)


class BenchReport(TypedDict):
    """Measurements for one index and search configuration.

    Every report echoes the full build and search configuration, so a row
    can be reproduced on its own.
    """

    #: The search mode (``guaranteed`` or ``optimized``).
    mode: str

    #: The number of subspaces.
    m: int

    #: The number of centroids per half.
    centroids: int

    #: The CEV threshold the index was built with.
    tau_cev: Optional[float]

    #: The random seed the index was built with.
    seed: Optional[int]

    #: Whether the index was rotated.
    rotated: bool

    #: The number of results per query.
    k: int

    budget_ratio: float
    min_collision_ratio: float
    patience_factor: Optional[float]
    eps0: float
    ad_stride: int

    #: The mean recall@k over the queries.
    recall_at_k: float

    #: Queries per second, over the wall-clock time of the whole batch.
    qps: float

    mean_latency_ms: float
    median_latency_ms: float

    #: The mean number of candidates per query.
    mean_candidates: float

    #: The mean fraction of N verified per query.
    verified_fraction: float

    #: The time taken to build the index.
    build_seconds: Optional[float]

    #: The logical size of the index.
    logical_bytes: int

    #: Whether queries ran on more than one worker.
    parallel: bool

    #: The number of query workers.
    workers: int


#: The CSV column order for benchmark reports.
REPORT_FIELDS: Sequence[str] = tuple(BenchReport.__annotations__)


def evaluate_config(
    index: CrispIndex,
    queries: DatasetMatrix,
    gt: GroundTruth,
    config: SearchConfig,
    *,
    build_seconds: Optional[float],
    tau_cev: Optional[float],
    seed: Optional[int],
    workers: int = 1,
) -> BenchReport:
    """Run a batch of queries and measure recall and throughput.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index to search.

        queries (crisp.datasets.types.DatasetMatrix):
            The queries.

        gt (crisp.datasets.types.GroundTruth):
            The ground truth for the queries. It needs at least ``k``
            neighbors per query.

        config (crisp.search.config.SearchConfig):
            The search configuration.

        build_seconds (float):
            The time taken to build the index, or ``None`` if it was
            loaded from a file.

        tau_cev (float):
            The CEV threshold the index was built with, if known.

        seed (int):
            The seed the index was built with, if known.

        workers (int, optional):
            The number of query workers.

    Returns:
        BenchReport:
        The measurements.

    Raises:
        crisp.errors.InvalidArgumentError:
            The configuration didn't fit the index or ground truth.
    """
    start = time.perf_counter()
    results = search_batch(index, queries, config, workers=workers)
    elapsed = time.perf_counter() - start

    recall = recall_at_k([result.ids for result in results], gt, config.k)
    latencies = np.array([result.stats.latency for result in results])
    candidates = np.array([result.stats.candidates for result in results])
    verified = np.array([result.stats.verified for result in results])

    if len(results):
        qps = len(results) / elapsed if elapsed > 0 else float('inf')
        mean_latency = float(latencies.mean()) * 1000
        median_latency = float(np.median(latencies)) * 1000
        mean_candidates = float(candidates.mean())
        verified_fraction = float(verified.mean()) / index.n
    else:
        qps = mean_latency = median_latency = 0.0
        mean_candidates = verified_fraction = 0.0

    report: BenchReport = {
        'mode': config.mode.name.lower(),
        'm': index.m,
        'centroids': index.k,
        'tau_cev': tau_cev,
        'seed': seed,
        'rotated': index.rotation.applied,
        'k': config.k,
        'budget_ratio': config.budget_ratio,
        'min_collision_ratio': config.min_collision_ratio,
        'patience_factor': config.patience_factor,
        'eps0': config.eps0,
        'ad_stride': config.ad_stride,
        'recall_at_k': recall,
        'qps': qps,
        'mean_latency_ms': mean_latency,
        'median_latency_ms': median_latency,
        'mean_candidates': mean_candidates,
        'verified_fraction': verified_fraction,
        'build_seconds': build_seconds,
        'logical_bytes': index_logical_bytes(index),
        'parallel': workers > 1,
        'workers': workers,
    }

    logger.info('%s mode, budget %g, min collisions %g: recall@%d=%.4f, '
                '%.1f QPS',
                report['mode'], config.budget_ratio,
                config.min_collision_ratio, config.k, recall, qps)

    return report


def _format_cell(value: Any) -> Any:
    if isinstance(value, np.generic):
        value = value.item()

    if value is None:
        return ''

    if isinstance(value, bool):
        return int(value)

    if isinstance(value, float):
        return repr(value)

    return value


def write_csv(
    rows: Iterable[dict[str, Any]],
    fp: IO[str],
    fields: Sequence[str],
) -> int:
    """Write rows as CSV with a header.

    ``None`` values are written as empty cells and booleans as 0 or 1.

    Args:
        rows (list of dict):
            The rows to write.

        fp (io.TextIOBase):
            The destination stream.

        fields (list of str):
            The columns, in order.

    Returns:
        int:
        The number of rows written.
    """
    writer = csv.DictWriter(fp, fieldnames=list(fields), lineterminator='\n',
                            extrasaction='ignore')
    writer.writeheader()
    count = 0

    for row in rows:
        writer.writerow({
            field: _format_cell(row.get(field))
            for field in fields
        })
        count += 1

    return count
