from __future__ import annotations

import math
from unittest import TestCase

import numpy as np
from scipy.stats import binom

from crisp.datasets.groundtruth import brute_force_knn
from crisp.datasets.synthetic import isotropic
from crisp.datasets.types import DatasetMatrix, GroundTruth
from crisp.errors import InvalidArgumentError
from crisp.index.builder import build_index
from crisp.search.config import SearchConfig, SearchMode
from crisp.search.engine import search_batch
from crisp.theory.bounds import (LOG_SPACE_THRESHOLD,
                                 BoundInput,
                                 exact_binomial_failure,
                                 hoeffding_recall_bound,
                                 simulate_collision_retrieval,
                                 theory_rows)
from crisp.theory.collisions import (estimate_p_star,
                                     measured_theory_rows,
                                     nearest_neighbor_collisions)


def _valid_grid():
    for m in (4, 8, 16, 64):
        for p_star in (0.3, 0.5, 0.8):
            for tau in range(0, m + 1):
                if m * p_star > tau:
                    yield m, p_star, tau


class HoeffdingBoundTests(TestCase):
    """Unit tests for hoeffding_recall_bound."""

    def test_worked_value(self):
        """Testing hoeffding_recall_bound with M=16, p*=0.5, tau=4"""
        bound = hoeffding_recall_bound(BoundInput(16, 0.5, 4))

        self.assertAlmostEqual(bound, 1 - math.exp(-2), delta=1e-9)
        self.assertAlmostEqual(bound, 0.864665, delta=1e-6)

    def test_vacuous_at_equality(self):
        """Testing hoeffding_recall_bound when M * p* equals tau"""
        bound_input = BoundInput(16, 0.5, 8)

        self.assertTrue(bound_input.vacuous)
        self.assertIsNone(hoeffding_recall_bound(bound_input))
        self.assertIsNone(hoeffding_recall_bound(BoundInput(16, 0.25, 10)))

    def test_zero_threshold(self):
        """Testing hoeffding_recall_bound with tau of 0"""
        bound = hoeffding_recall_bound(BoundInput(8, 0.3, 0))

        self.assertAlmostEqual(bound, 1 - math.exp(-2 * 8 * 0.3 ** 2),
                               delta=1e-12)

    def test_monotonic(self):
        """Testing hoeffding_recall_bound grows with p* and shrinks with
        tau
        """
        for m in (8, 16, 64):
            previous = None

            for p_star in np.linspace(0.3, 1.0, 15):
                bound = hoeffding_recall_bound(BoundInput(m, p_star, 2))

                if previous is not None:
                    self.assertGreaterEqual(bound, previous)

                previous = bound

            previous = None

            for tau in range(0, m // 2):
                bound = hoeffding_recall_bound(BoundInput(m, 0.5, tau))

                if previous is not None:
                    self.assertLessEqual(bound, previous)

                previous = bound

    def test_invalid_input(self):
        """Testing BoundInput with out-of-range values"""
        for args in ((0, 0.5, 1), (4, 1.5, 1), (4, -0.1, 1), (4, 0.5, -1)):
            with self.assertRaises(InvalidArgumentError):
                BoundInput(*args)


class ExactFailureTests(TestCase):
    """Unit tests for exact_binomial_failure."""

    def test_worked_value(self):
        """Testing exact_binomial_failure with M=16, p*=0.5, tau=4"""
        failure = exact_binomial_failure(16, 0.5, 4)

        self.assertAlmostEqual(failure, 697 / 65536, delta=1e-15)
        self.assertLessEqual(failure, math.exp(-2))

    def test_edge_cases(self):
        """Testing exact_binomial_failure at the edges"""
        self.assertEqual(exact_binomial_failure(16, 0.5, 0), 0.0)
        self.assertEqual(exact_binomial_failure(16, 1.0, 16), 0.0)
        self.assertEqual(exact_binomial_failure(16, 0.0, 1), 1.0)
        self.assertEqual(exact_binomial_failure(16, 0.5, 17), 1.0)

    def test_dominated_by_hoeffding(self):
        """Testing exact_binomial_failure never exceeds the Hoeffding tail
        """
        for m, p_star, tau in _valid_grid():
            tail = math.exp(-2 * (m * p_star - tau) ** 2 / m)
            failure = exact_binomial_failure(m, p_star, tau)

            self.assertLessEqual(failure, tail + 1e-12,
                                 (m, p_star, tau))
            self.assertAlmostEqual(
                1 - hoeffding_recall_bound(BoundInput(m, p_star, tau)),
                tail, delta=1e-12)

    def test_matches_scipy(self):
        """Testing exact_binomial_failure against scipy's binomial CDF"""
        for m in (4, 16, LOG_SPACE_THRESHOLD, 64, 100, 500):
            for p_star in (0.05, 0.3, 0.5, 0.8):
                for tau in sorted({1, m // 4, m // 2, m}):
                    expected = float(binom.cdf(tau - 1, m, p_star))

                    self.assertAlmostEqual(
                        exact_binomial_failure(m, p_star, tau), expected,
                        delta=1e-12 + 1e-9 * expected,
                        msg=repr((m, p_star, tau)))


class SimulationTests(TestCase):
    """Unit tests for simulate_collision_retrieval."""

    def test_converges(self):
        """Testing simulate_collision_retrieval against the exact tail"""
        exact = exact_binomial_failure(16, 0.5, 4)
        sigma = math.sqrt(exact * (1 - exact) / 100_000)

        simulated = simulate_collision_retrieval(16, 0.5, 4, 100_000,
                                                 seed=1)

        self.assertLessEqual(abs(simulated - exact), 4 * sigma)
        self.assertLessEqual(abs(simulated - exact), 0.003)

    def test_workers(self):
        """Testing simulate_collision_retrieval is independent of workers"""
        a = simulate_collision_retrieval(8, 0.3, 3, 45_000, seed=7)
        b = simulate_collision_retrieval(8, 0.3, 3, 45_000, seed=7,
                                         workers=4)

        self.assertEqual(a, b)

    def test_edge_cases(self):
        """Testing simulate_collision_retrieval at the edges"""
        self.assertEqual(simulate_collision_retrieval(8, 0.0, 1, 1000), 1.0)
        self.assertEqual(simulate_collision_retrieval(8, 0.6, 0, 1000), 0.0)

    def test_invalid_trials(self):
        """Testing simulate_collision_retrieval with no trials"""
        with self.assertRaises(InvalidArgumentError):
            simulate_collision_retrieval(8, 0.5, 1, 0)

    def test_theory_rows(self):
        """Testing theory_rows covers every combination"""
        rows = list(theory_rows([4, 16], [0.5], [2, 8], trials=2000))

        self.assertEqual([(row['m'], row['tau']) for row in rows],
                         [(4, 2), (4, 8), (16, 2), (16, 8)])
        self.assertIsNone(rows[0]['hoeffding_bound'])
        self.assertEqual(rows[1]['exact_failure'], 1.0)
        self.assertIsNone(rows[3]['hoeffding_bound'])
        self.assertIsNotNone(rows[2]['hoeffding_bound'])


class CollisionMeasurementTests(TestCase):
    """Unit tests for measuring nearest-neighbor collisions."""

    def test_full_coverage(self):
        """Testing estimate_p_star with a single cell and full budget"""
        data = isotropic(200, 16, seed=4)
        queries = isotropic(6, 16, seed=5)
        gt = brute_force_knn(data, queries, 1)
        index = build_index(data, 4, 1, copy=True)

        p_star = estimate_p_star(index, queries, gt, 1.0)

        self.assertEqual(p_star.tolist(), [1.0] * 6)

    def test_range(self):
        """Testing nearest_neighbor_collisions with a tiny budget"""
        data = isotropic(300, 16, seed=6)
        queries = isotropic(10, 16, seed=7)
        gt = brute_force_knn(data, queries, 3)
        index = build_index(data, 4, 6, kmeans_iters=5, copy=True)

        counts = nearest_neighbor_collisions(index, queries, gt, 1e-6)

        self.assertTrue(((counts >= 0) & (counts <= 4)).all())

        p_star = estimate_p_star(index, queries, gt, 0.5)
        self.assertTrue(((p_star >= 0) & (p_star <= 1)).all())

    def test_failure_rate_within_bound(self):
        """Testing measured collision failures stay under the Hoeffding
        tail on isotropic data
        """
        data = isotropic(2000, 32, seed=8)
        queries = isotropic(200, 32, seed=9)
        gt = brute_force_knn(data, queries, 1)
        index = build_index(data, 8, 10, copy=True)
        tau = 2

        counts = nearest_neighbor_collisions(index, queries, gt, 0.1)
        bound_input = BoundInput(index.m, float(counts.mean()) / index.m,
                                 tau)

        self.assertFalse(bound_input.vacuous)

        tail = 1.0 - hoeffding_recall_bound(bound_input)
        failure_rate = float(np.mean(counts < tau))
        sigma = math.sqrt(tail * (1.0 - tail) / queries.n)

        self.assertLessEqual(failure_rate, tail + 3 * sigma)

    def test_guaranteed_recall_meets_bound(self):
        """Testing guaranteed-mode recall of the nearest neighbor against
        the bound at the lower quartile of p*
        """
        data = isotropic(2000, 32, seed=10)
        queries = isotropic(200, 32, seed=11)
        gt = brute_force_knn(data, queries, 1)
        index = build_index(data, 8, 10, copy=True)
        budget_ratio = 0.2
        tau = 1

        p_star = estimate_p_star(index, queries, gt, budget_ratio)
        bound = hoeffding_recall_bound(
            BoundInput(index.m, float(np.percentile(p_star, 25)), tau))

        self.assertIsNotNone(bound)

        config = SearchConfig(k=10, budget_ratio=budget_ratio,
                              min_collision_ratio=tau / index.m,
                              mode=SearchMode.GUARANTEED)
        results = search_batch(index, queries, config)
        found = np.mean([
            gt.ids[qi, 0] in result.ids
            for qi, result in enumerate(results)
        ])

        self.assertEqual(config.tau(index.m), tau)
        self.assertGreaterEqual(found, bound - 0.02)

    def test_measured_theory_rows(self):
        """Testing measured_theory_rows against the measured collision
        counts
        """
        data = isotropic(500, 16, seed=12)
        queries = isotropic(40, 16, seed=13)
        gt = brute_force_knn(data, queries, 1)
        index = build_index(data, 4, 6, kmeans_iters=5, copy=True)

        counts = nearest_neighbor_collisions(index, queries, gt, 0.2)
        rows = list(measured_theory_rows(index, queries, gt, 0.2, [1, 2, 5],
                                         trials=2000))

        self.assertEqual([row['tau'] for row in rows], [1, 2, 5])

        for row in rows:
            self.assertEqual(row['m'], 4)
            self.assertAlmostEqual(row['p_star'], counts.mean() / 4,
                                   delta=1e-12)
            self.assertAlmostEqual(row['measured_failure'],
                                   np.mean(counts < row['tau']),
                                   delta=1e-12)

        self.assertEqual(rows[2]['measured_failure'], 1.0)
        self.assertEqual(rows[2]['exact_failure'], 1.0)

    def test_measured_theory_rows_no_queries(self):
        """Testing measured_theory_rows with no queries"""
        data = isotropic(100, 8, seed=1)
        index = build_index(data, 2, 2, kmeans_iters=3, copy=True)

        with self.assertRaises(InvalidArgumentError):
            list(measured_theory_rows(index, DatasetMatrix(np.zeros((0, 8))),
                                      GroundTruth(np.zeros((0, 1))), 0.5,
                                      [1], trials=100))

    def test_mismatched_ground_truth(self):
        """Testing nearest_neighbor_collisions with the wrong row count"""
        data = isotropic(100, 8, seed=1)
        queries = isotropic(3, 8, seed=2)
        index = build_index(data, 2, 2, kmeans_iters=3, copy=True)

        with self.assertRaises(InvalidArgumentError):
            nearest_neighbor_collisions(index, queries,
                                        GroundTruth(np.zeros((2, 1))), 0.5)

        with self.assertRaises(InvalidArgumentError):
            nearest_neighbor_collisions(index, queries,
                                        GroundTruth(np.full((3, 1), 100)),
                                        0.5)
