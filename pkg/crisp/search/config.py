"""Search configuration."""

from __future__ import annotations

import enum
import math
from typing import Any, Optional

from crisp.errors import InvalidArgumentError


#: The default patience multiplier (patience is this times k).
DEFAULT_PATIENCE_FACTOR = 40.0

#: The default ADSampling safety margin.
DEFAULT_EPS0 = 2.1

#: The default number of dimensions between ADSampling checks.
DEFAULT_AD_STRIDE = 32

# Products like 0.3 * 10 land a hair above the integer they represent.
_CEIL_SLACK = 1e-9


def _ceil_fraction(
    ratio: float,
    total: int,
) -> int:
    return max(1, math.ceil(ratio * total - _CEIL_SLACK))


class SearchMode(enum.IntEnum):
    """The query execution mode."""

    #: Binary collision scoring and exact verification of every candidate.
    GUARANTEED = 0

    #: Rank-weighted scoring, Hamming re-ranking, and ADSampling with
    #: patience-based early termination.
    OPTIMIZED = 1


class SearchConfig:
    """Parameters controlling a search.

    All values are validated on construction.
    """

    ######################
    # Instance variables #
    ######################

    #: The number of dimensions between ADSampling checks.
    ad_stride: int

    #: The fraction of N to retrieve from each subspace.
    budget_ratio: float

    #: The ADSampling safety margin.
    eps0: float

    #: The number of results to return.
    k: int

    #: The fraction of subspaces a candidate must collide in.
    min_collision_ratio: float

    #: The execution mode.
    mode: SearchMode

    #: The patience multiplier, or ``None`` if early termination is off.
    patience_factor: Optional[float]

    def __init__(
        self,
        *,
        k: int,
        budget_ratio: float,
        min_collision_ratio: float,
        mode: SearchMode = SearchMode.OPTIMIZED,
        patience_factor: Optional[float] = DEFAULT_PATIENCE_FACTOR,
        eps0: float = DEFAULT_EPS0,
        ad_stride: int = DEFAULT_AD_STRIDE,
    ) -> None:
        """Initialize the configuration.

        Args:
            k (int):
                The number of results to return.

            budget_ratio (float):
                The fraction of N to retrieve from each subspace, in
                ``(0, 1]``.

            min_collision_ratio (float):
                The fraction of subspaces a candidate must collide in, in
                ``(0, 1]``.

            mode (SearchMode, optional):
                The execution mode.

            patience_factor (float, optional):
                The patience multiplier. ``None`` or infinity disables early
                termination.

            eps0 (float, optional):
                The ADSampling safety margin.

            ad_stride (int, optional):
                The number of dimensions between ADSampling checks.

        Raises:
            crisp.errors.InvalidArgumentError:
                A value was out of range.
        """
        if k < 1:
            raise InvalidArgumentError('k must be >= 1, got %r' % k)

        if not 0 < budget_ratio <= 1:
            raise InvalidArgumentError(
                'budget_ratio must be in (0, 1], got %r' % budget_ratio)

        if not 0 < min_collision_ratio <= 1:
            raise InvalidArgumentError(
                'min_collision_ratio must be in (0, 1], got %r'
                % min_collision_ratio)

        if patience_factor is not None:
            if math.isinf(patience_factor) and patience_factor > 0:
                patience_factor = None
            elif not patience_factor > 0:
                raise InvalidArgumentError(
                    'patience_factor must be positive, got %r'
                    % patience_factor)

        if not eps0 > 0:
            raise InvalidArgumentError('eps0 must be positive, got %r' % eps0)

        if ad_stride < 1:
            raise InvalidArgumentError('ad_stride must be >= 1, got %r'
                                       % ad_stride)

        try:
            mode = SearchMode(mode)
        except ValueError:
            raise InvalidArgumentError('Unknown search mode %r' % (mode,))

        self.k = int(k)
        self.budget_ratio = float(budget_ratio)
        self.min_collision_ratio = float(min_collision_ratio)
        self.mode = mode
        self.patience_factor = patience_factor
        self.eps0 = float(eps0)
        self.ad_stride = int(ad_stride)

    def budget(
        self,
        n: int,
    ) -> int:
        """Return the number of ids to retrieve per subspace.

        Args:
            n (int):
                The number of indexed points.

        Returns:
            int:
            ``ceil(budget_ratio * n)``, at least 1.
        """
        return _ceil_fraction(self.budget_ratio, n)

    def tau(
        self,
        m: int,
    ) -> int:
        """Return the minimum collision score for a candidate.

        Args:
            m (int):
                The number of subspaces.

        Returns:
            int:
            ``ceil(min_collision_ratio * m)``, at least 1.
        """
        return _ceil_fraction(self.min_collision_ratio, m)

    @property
    def patience(self) -> Optional[int]:
        """The patience limit, or ``None`` if early termination is off."""
        if self.patience_factor is None:
            return None

        return max(1, math.ceil(self.patience_factor * self.k))

    def replace(
        self,
        **changes: Any,
    ) -> SearchConfig:
        """Return a copy of this configuration with some values changed.

        Args:
            **changes (dict):
                The values to change.

        Returns:
            SearchConfig:
            The new configuration.
        """
        values = self.to_dict()
        values.update(changes)

        return SearchConfig(**values)

    def to_dict(self) -> dict[str, Any]:
        """Return the configuration as a dictionary.

        Returns:
            dict:
            The keyword arguments that recreate this configuration.
        """
        return {
            'k': self.k,
            'budget_ratio': self.budget_ratio,
            'min_collision_ratio': self.min_collision_ratio,
            'mode': self.mode,
            'patience_factor': self.patience_factor,
            'eps0': self.eps0,
            'ad_stride': self.ad_stride,
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SearchConfig):
            return NotImplemented

        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return ('<SearchConfig mode=%s k=%d budget_ratio=%g '
                'min_collision_ratio=%g>'
                % (self.mode.name.lower(), self.k, self.budget_ratio,
                   self.min_collision_ratio))
