"""Recall lower bounds for collision-count retrieval.

If a point's cell is activated independently in each of ``m`` subspaces
with probability ``p_star``, its collision count is
``Binomial(m, p_star)``. The point is retrieved when that count reaches
``tau``, and Hoeffding's inequality bounds the chance that it doesn't.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator, Optional

import numpy as np
from scipy.special import gammaln
from typing_extensions import TypedDict

from crisp.errors import InvalidArgumentError


logger = logging.getLogger(__name__)


#: Above this many subspaces, binomial terms are summed in log space.
LOG_SPACE_THRESHOLD = 60

#: The number of simulated trials drawn from each random stream.
SIMULATION_BLOCK = 10_000


class BoundInput:
    """The parameters of a recall bound."""

    ######################
    # Instance variables #
    ######################

    #: The number of subspaces.
    m: int

    #: The probability of a collision in a single subspace.
    p_star: float

    #: The collision threshold.
    tau: int

    def __init__(
        self,
        m: int,
        p_star: float,
        tau: int,
    ) -> None:
        """Initialize the input.

        Args:
            m (int):
                The number of subspaces. This must be at least 1.

            p_star (float):
                The single-subspace collision probability, in ``[0, 1]``.

            tau (int):
                The collision threshold. This must not be negative.

        Raises:
            crisp.errors.InvalidArgumentError:
                A value was out of range.
        """
        if m < 1:
            raise InvalidArgumentError('m must be >= 1, got %r' % m)

        if not 0.0 <= p_star <= 1.0:
            raise InvalidArgumentError('p_star must be in [0, 1], got %r'
                                       % p_star)

        if tau < 0:
            raise InvalidArgumentError('tau must be >= 0, got %r' % tau)

        self.m = int(m)
        self.p_star = float(p_star)
        self.tau = int(tau)

    @property
    def mu(self) -> float:
        """The expected collision count, ``m * p_star``."""
        return self.m * self.p_star

    @property
    def vacuous(self) -> bool:
        """Whether the bound says nothing (``m * p_star <= tau``)."""
        return not self.mu > self.tau

    def __repr__(self) -> str:
        return ('<BoundInput m=%d p_star=%g tau=%d>'
                % (self.m, self.p_star, self.tau))


def hoeffding_recall_bound(bound_input: BoundInput) -> Optional[float]:
    """Return the lower bound on the probability of retrieval.

    Args:
        bound_input (BoundInput):
            The bound parameters.

    Returns:
        float:
        ``1 - exp(-2 (m p* - tau)² / m)``, or ``None`` if the bound is
        vacuous.
    """
    if bound_input.vacuous:
        return None

    gap = bound_input.mu - bound_input.tau

    return -math.expm1(-2.0 * gap * gap / bound_input.m)


def exact_binomial_failure(
    m: int,
    p_star: float,
    tau: int,
) -> float:
    """Return the exact probability that fewer than ``tau`` collisions occur.

    This is ``P(S < tau)`` for ``S ~ Binomial(m, p_star)``, summed term by
    term in float64. Above :py:data:`LOG_SPACE_THRESHOLD` subspaces each
    term is computed in log space.

    Args:
        m (int):
            The number of subspaces.

        p_star (float):
            The single-subspace collision probability.

        tau (int):
            The collision threshold.

    Returns:
        float:
        The failure probability.

    Raises:
        crisp.errors.InvalidArgumentError:
            A value was out of range.
    """
    BoundInput(m, p_star, tau)

    if tau <= 0:
        return 0.0

    if tau > m:
        return 1.0

    if p_star == 0.0:
        return 1.0

    if p_star == 1.0:
        return 0.0

    counts = np.arange(tau, dtype=np.float64)

    if m > LOG_SPACE_THRESHOLD:
        log_terms = (gammaln(m + 1) - gammaln(counts + 1) -
                     gammaln(m - counts + 1) +
                     counts * math.log(p_star) +
                     (m - counts) * math.log1p(-p_star))
        total = float(np.exp(log_terms).sum())
    else:
        total = math.fsum(
            math.comb(m, s) * p_star ** s * (1.0 - p_star) ** (m - s)
            for s in range(tau))

    return min(1.0, total)


def simulate_collision_retrieval(
    m: int,
    p_star: float,
    tau: int,
    trials: int,
    seed: int = 0,
    *,
    workers: int = 1,
) -> float:
    """Estimate the failure probability by simulation.

    Trials are drawn in fixed-size blocks, each from its own random stream
    spawned from ``seed``. The result is the same for any number of
    workers.

    Args:
        m (int):
            The number of subspaces.

        p_star (float):
            The single-subspace collision probability.

        tau (int):
            The collision threshold.

        trials (int):
            The number of simulated collision counts.

        seed (int, optional):
            The random seed.

        workers (int, optional):
            The number of worker threads.

    Returns:
        float:
        The fraction of trials with fewer than ``tau`` collisions.

    Raises:
        crisp.errors.InvalidArgumentError:
            A value was out of range.
    """
    BoundInput(m, p_star, tau)

    if trials < 1:
        raise InvalidArgumentError('trials must be >= 1, got %r' % trials)

    num_blocks = -(-trials // SIMULATION_BLOCK)
    streams = np.random.SeedSequence(seed).spawn(num_blocks)

    def _run_block(block: int) -> int:
        size = min(SIMULATION_BLOCK, trials - block * SIMULATION_BLOCK)
        rng = np.random.default_rng(streams[block])
        samples = rng.binomial(m, p_star, size=size)

        return int(np.count_nonzero(samples < tau))

    if workers > 1 and num_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            failures = sum(executor.map(_run_block, range(num_blocks)))
    else:
        failures = sum(_run_block(block) for block in range(num_blocks))

    return failures / trials


class TheoryRow(TypedDict):
    """One row of the theory report."""

    m: int
    p_star: float
    tau: int
    exact_failure: float
    hoeffding_bound: Optional[float]
    simulated_failure: float


def theory_rows(
    ms: Iterable[int],
    p_stars: Iterable[float],
    taus: Iterable[int],
    trials: int,
    seed: int = 0,
    *,
    workers: int = 1,
) -> Iterator[TheoryRow]:
    """Yield a theory report row for every combination of parameters.

    Args:
        ms (list of int):
            The subspace counts.

        p_stars (list of float):
            The collision probabilities.

        taus (list of int):
            The collision thresholds.

        trials (int):
            The number of simulated trials per row.

        seed (int, optional):
            The random seed for every simulation.

        workers (int, optional):
            The number of simulation worker threads.

    Yields:
        TheoryRow:
        The report row. ``hoeffding_bound`` is ``None`` when vacuous.

    Raises:
        crisp.errors.InvalidArgumentError:
            A value was out of range.
    """
    p_stars = list(p_stars)
    taus = list(taus)

    for m in ms:
        for p_star in p_stars:
            for tau in taus:
                bound_input = BoundInput(m, p_star, tau)

                yield {
                    'm': bound_input.m,
                    'p_star': bound_input.p_star,
                    'tau': bound_input.tau,
                    'exact_failure': exact_binomial_failure(m, p_star, tau),
                    'hoeffding_bound': hoeffding_recall_bound(bound_input),
                    'simulated_failure': simulate_collision_retrieval(
                        m, p_star, tau, trials, seed, workers=workers),
                }
