"""Trade-off summaries over benchmark reports."""

from __future__ import annotations

from typing import Any, Iterable, Mapping, Optional, Sequence, TypeVar

from typing_extensions import TypedDict


_RowT = TypeVar('_RowT', bound=Mapping[str, Any])


#: The recall levels reported in the build-time table.
DEFAULT_RECALL_THRESHOLDS: Sequence[float] = (0.80, 0.85, 0.90, 0.95, 0.99)


class BuildTimeRow(TypedDict):
    """The cheapest build that reached a recall level."""

    recall_threshold: float
    build_seconds: float
    recall_at_k: float
    m: int
    tau_cev: float
    mode: str
    budget_ratio: float
    min_collision_ratio: float


#: The CSV column order for the build-time table.
BUILD_TIME_FIELDS: Sequence[str] = tuple(BuildTimeRow.__annotations__)


def dominates(
    a: Mapping[str, Any],
    b: Mapping[str, Any],
    x: str = 'recall_at_k',
    y: str = 'qps',
) -> bool:
    """Return whether ``a`` dominates ``b``.

    ``a`` dominates ``b`` if it's at least as good on both axes and strictly
    better on one. Higher is better on both.

    Args:
        a (dict):
            The first row.

        b (dict):
            The second row.

        x (str, optional):
            The first axis.

        y (str, optional):
            The second axis.

    Returns:
        bool:
        ``True`` if ``a`` dominates ``b``.
    """
    return ((a[x] >= b[x] and a[y] > b[y]) or
            (a[x] > b[x] and a[y] >= b[y]))


def pareto_front(
    rows: Iterable[_RowT],
    x: str = 'recall_at_k',
    y: str = 'qps',
) -> list[_RowT]:
    """Return the rows not dominated by any other row.

    Rows with identical values on both axes don't dominate each other, so
    all of them are kept.

    Args:
        rows (list of dict):
            The rows to filter.

        x (str, optional):
            The first axis.

        y (str, optional):
            The second axis.

    Returns:
        list of dict:
        The non-dominated rows, in ascending order of ``x`` (then descending
        ``y``).
    """
    rows = list(rows)
    front = [
        row
        for row in rows
        if not any(dominates(other, row, x, y) for other in rows)
    ]

    return sorted(front, key=lambda row: (row[x], -row[y]))


def min_build_time_table(
    rows: Iterable[Mapping[str, Any]],
    thresholds: Sequence[float] = DEFAULT_RECALL_THRESHOLDS,
) -> list[BuildTimeRow]:
    """Find the fastest build that reaches each recall threshold.

    Thresholds that no row reaches are left out, and rows without a build
    time are skipped. Equal build times are resolved in favor of the
    earlier row.

    Args:
        rows (list of dict):
            The benchmark rows.

        thresholds (list of float, optional):
            The recall thresholds.

    Returns:
        list of BuildTimeRow:
        One entry per reached threshold, in threshold order.
    """
    rows = list(rows)
    table: list[BuildTimeRow] = []

    for threshold in thresholds:
        best: Optional[Mapping[str, Any]] = None

        for row in rows:
            if (row['recall_at_k'] >= threshold and
                row['build_seconds'] is not None and
                (best is None or
                 row['build_seconds'] < best['build_seconds'])):
                best = row

        if best is not None:
            table.append({
                'recall_threshold': threshold,
                'build_seconds': best['build_seconds'],
                'recall_at_k': best['recall_at_k'],
                'm': best['m'],
                'tau_cev': best['tau_cev'],
                'mode': best['mode'],
                'budget_ratio': best['budget_ratio'],
                'min_collision_ratio': best['min_collision_ratio'],
            })

    return table
