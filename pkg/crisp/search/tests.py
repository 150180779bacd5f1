from __future__ import annotations

import itertools
import math
from unittest import TestCase

import numpy as np

from crisp.datasets.groundtruth import brute_force_knn, recall_at_k
from crisp.datasets.synthetic import (clustered,
                                     generate_base_and_queries,
                                     isotropic)
from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError
from crisp.index.binary import binarize, binarize_rows
from crisp.index.builder import build_index
from crisp.index.codebooks import assign_cells
from crisp.index.postings import build_postings
from crisp.preprocessing.rotation import RotationPolicy
from crisp.search.config import SearchConfig, SearchMode
from crisp.search.engine import (SearchStats,
                                 collect_candidates,
                                 search,
                                 search_batch,
                                 verify_adaptive,
                                 verify_exact)
from crisp.search.scoring import (ScoreScratch,
                                  accumulate_subspace,
                                  filter_candidates)
from crisp.search.traversal import CellCursor, sorted_partial_distances
from crisp.search.verification import (_checkpoints,
                                       adsampling_verify,
                                       hamming_rerank)


def _sorted_cursor(dist_left, dist_right):
    return CellCursor(np.asarray(dist_left, dtype=np.float64),
                      np.arange(len(dist_left)),
                      np.asarray(dist_right, dtype=np.float64),
                      np.arange(len(dist_right)))


class SearchConfigTests(TestCase):
    """Unit tests for SearchConfig."""

    def test_derived_values(self):
        """Testing SearchConfig budget, tau and patience"""
        config = SearchConfig(k=10, budget_ratio=0.05,
                              min_collision_ratio=0.3)

        self.assertEqual(config.budget(1000), 50)
        self.assertEqual(config.budget(10), 1)
        self.assertEqual(config.tau(10), 3)
        self.assertEqual(config.tau(4), 2)
        self.assertEqual(config.patience, 400)
        self.assertEqual(config.mode, SearchMode.OPTIMIZED)

    def test_infinite_patience(self):
        """Testing SearchConfig with an infinite patience factor"""
        config = SearchConfig(k=10, budget_ratio=0.1, min_collision_ratio=0.1,
                              patience_factor=math.inf)

        self.assertIsNone(config.patience_factor)
        self.assertIsNone(config.patience)

    def test_invalid(self):
        """Testing SearchConfig with out-of-range values"""
        for kwargs in ({'k': 0},
                       {'budget_ratio': 0.0},
                       {'budget_ratio': 1.5},
                       {'min_collision_ratio': 0.0},
                       {'patience_factor': -1.0},
                       {'eps0': 0.0},
                       {'ad_stride': 0},
                       {'mode': 7}):
            values = {
                'k': 10,
                'budget_ratio': 0.1,
                'min_collision_ratio': 0.1,
            }
            values.update(kwargs)

            with self.assertRaises(InvalidArgumentError, msg=repr(kwargs)):
                SearchConfig(**values)

    def test_replace(self):
        """Testing SearchConfig.replace"""
        config = SearchConfig(k=10, budget_ratio=0.1, min_collision_ratio=0.1)
        changed = config.replace(mode=SearchMode.GUARANTEED)

        self.assertEqual(changed.mode, SearchMode.GUARANTEED)
        self.assertEqual(changed.k, 10)
        self.assertNotEqual(changed, config)
        self.assertEqual(changed.replace(mode=SearchMode.OPTIMIZED), config)


class TraversalTests(TestCase):
    """Unit tests for the multi-sequence cell traversal."""

    def test_sorted_partial_distances(self):
        """Testing sorted_partial_distances with a query on a centroid"""
        rng = np.random.default_rng(1)
        centroids = rng.standard_normal((6, 3))

        dists, ids = sorted_partial_distances(centroids[3], centroids)

        self.assertEqual(dists[0], 0.0)
        self.assertEqual(ids[0], 3)

    def test_sorted_partial_distances_single(self):
        """Testing sorted_partial_distances with one centroid"""
        dists, ids = sorted_partial_distances(np.array([1.0, 2.0]),
                                              np.array([[1.0, 0.0]]))

        self.assertEqual(dists.tolist(), [4.0])
        self.assertEqual(ids.tolist(), [0])

    def test_sorted_partial_distances_matches_naive(self):
        """Testing sorted_partial_distances against a naive scan"""
        rng = np.random.default_rng(2)
        centroids = rng.standard_normal((50, 4))
        q = rng.standard_normal(4)

        dists, ids = sorted_partial_distances(q, centroids)

        naive = sorted(
            (sum((float(c) - float(x)) ** 2 for c, x in zip(row, q)), i)
            for i, row in enumerate(centroids))
        self.assertEqual(ids.tolist(), [i for _dist, i in naive])
        self.assertTrue(np.allclose(dists, [dist for dist, _i in naive]))

    def test_next_cell_order(self):
        """Testing CellCursor.next_cell emits cells by ascending cost"""
        cursor = _sorted_cursor([0, 1, 5], [0, 2, 9])

        emitted = list(cursor)

        self.assertEqual([cell for cell, _cost, _rank in emitted],
                         [0, 3, 1, 4, 6, 7, 2, 5, 8])
        self.assertEqual([cost for _cell, cost, _rank in emitted],
                         [0, 1, 2, 3, 5, 7, 9, 10, 14])
        self.assertEqual([rank for _cell, _cost, rank in emitted],
                         list(range(1, 10)))
        self.assertIsNone(cursor.next_cell())

    def test_next_cell_single(self):
        """Testing CellCursor.next_cell with one centroid per half"""
        cursor = _sorted_cursor([0.5], [0.25])

        self.assertEqual(cursor.next_cell(), (0, 0.75, 1))
        self.assertIsNone(cursor.next_cell())

    def test_next_cell_permuted_ids(self):
        """Testing CellCursor maps sorted positions back to centroid ids"""
        left = np.array([[5.0], [0.0]])
        right = np.array([[0.0], [3.0], [1.0]])

        cursor = CellCursor.for_query(np.array([0.0, 0.0]), left, right)

        # Left order is [1, 0], right order is [0, 2, 1].
        self.assertEqual(cursor.next_cell(), (1 * 3 + 0, 0.0, 1))
        self.assertEqual(cursor.next_cell(), (1 * 3 + 2, 1.0, 2))

    def test_next_cell_matches_enumeration(self):
        """Testing CellCursor against a sorted enumeration of all cells"""
        rng = np.random.default_rng(3)

        for trial in range(100):
            k = int(rng.integers(1, 11))
            dist_left = np.sort(rng.random(k))
            dist_right = np.sort(rng.random(k))
            cursor = _sorted_cursor(dist_left, dist_right)

            emitted = list(cursor)
            expected = sorted(float(a + b)
                              for a, b in itertools.product(dist_left,
                                                            dist_right))

            self.assertEqual([cost for _cell, cost, _rank in emitted],
                             expected)
            self.assertEqual(sorted(cell for cell, _cost, _rank in emitted),
                             list(range(k * k)))


class ScoringTests(TestCase):
    """Unit tests for collision scoring and candidate filtering."""

    def setUp(self):
        super().setUp()

        # Cell 0 holds points 0-5, cell 3 holds 6-7, cell 1 holds 8, and
        # everything else is empty. The cursor visits 0, 3, 1, 4, ...
        assignments = np.array([[0, 0, 0, 0, 0, 0, 3, 3, 1]])
        self.postings = build_postings(assignments, 9)

    def _accumulate(self, config, budget):
        scratch = ScoreScratch(self.postings.n)
        retrieved = accumulate_subspace(_sorted_cursor([0, 1, 5], [0, 2, 9]),
                                        self.postings, 0, scratch, config,
                                        budget)

        return scratch, retrieved

    def test_single_cell_budget(self):
        """Testing accumulate_subspace with a budget of one cell"""
        config = SearchConfig(k=1, budget_ratio=1.0, min_collision_ratio=1.0,
                              mode=SearchMode.GUARANTEED)

        scratch, retrieved = self._accumulate(config, 6)

        self.assertEqual(retrieved, 6)
        self.assertEqual(scratch.scores.tolist(),
                         [1, 1, 1, 1, 1, 1, 0, 0, 0])
        self.assertEqual(sorted(scratch.touched.tolist()), list(range(6)))

    def test_budget_overshoot(self):
        """Testing accumulate_subspace finishes the cell that crosses the
        budget
        """
        config = SearchConfig(k=1, budget_ratio=1.0, min_collision_ratio=1.0,
                              mode=SearchMode.GUARANTEED)

        scratch, retrieved = self._accumulate(config, 7)

        self.assertEqual(retrieved, 8)
        self.assertEqual(scratch.scores.tolist(),
                         [1, 1, 1, 1, 1, 1, 1, 1, 0])

    def test_exhausted_cells(self):
        """Testing accumulate_subspace stops when the cells run out"""
        config = SearchConfig(k=1, budget_ratio=1.0, min_collision_ratio=1.0,
                              mode=SearchMode.GUARANTEED)

        scratch, retrieved = self._accumulate(config, 1000)

        self.assertEqual(retrieved, 9)
        self.assertTrue((scratch.scores == 1).all())

    def test_weighted_ranks(self):
        """Testing accumulate_subspace doubles weights within the first k
        ranks in optimized mode
        """
        config = SearchConfig(k=2, budget_ratio=1.0, min_collision_ratio=1.0,
                              mode=SearchMode.OPTIMIZED)

        scratch, _retrieved = self._accumulate(config, 1000)

        # Ranks 1 and 2 are cells 0 and 3, rank 3 is cell 1.
        self.assertEqual(scratch.scores.tolist(),
                         [2, 2, 2, 2, 2, 2, 2, 2, 1])

    def test_reset(self):
        """Testing ScoreScratch.reset zeroes touched slots"""
        scratch = ScoreScratch(10)
        scratch.add(np.array([1, 4]), 2)
        scratch.add(np.array([4, 7]), 1)

        self.assertEqual(scratch.touched.tolist(), [1, 4, 7])
        self.assertEqual(scratch.scores[4], 3)

        scratch.reset()

        self.assertFalse(scratch.scores.any())
        self.assertEqual(len(scratch.touched), 0)

    def test_filter_threshold(self):
        """Testing filter_candidates keeps scores at or above tau"""
        config = SearchConfig(k=1, budget_ratio=1.0, min_collision_ratio=0.3)
        scratch = ScoreScratch(5)
        scratch.add(np.array([0, 1, 2]), 2)
        scratch.add(np.array([0, 3]), 1)

        candidates, tau, fallback = filter_candidates(scratch, config, 10)

        self.assertEqual(tau, 3)
        self.assertEqual(candidates.tolist(), [0])
        self.assertFalse(fallback)

    def test_filter_fallback(self):
        """Testing filter_candidates falls back to the top scores"""
        config = SearchConfig(k=10, budget_ratio=1.0, min_collision_ratio=0.3)
        scratch = ScoreScratch(30)
        scratch.add(np.arange(25), 1)
        scratch.add(np.arange(20, 25), 1)

        candidates, tau, fallback = filter_candidates(scratch, config, 10)

        self.assertEqual(tau, 3)
        self.assertTrue(fallback)
        self.assertEqual(candidates.tolist(),
                         [0, 1, 2, 3, 4, 20, 21, 22, 23, 24])

    def test_filter_fallback_few_touched(self):
        """Testing filter_candidates fallback with fewer touched than k"""
        config = SearchConfig(k=10, budget_ratio=1.0, min_collision_ratio=1.0)
        scratch = ScoreScratch(30)
        scratch.add(np.array([7, 3, 5]), 1)

        candidates, _tau, fallback = filter_candidates(scratch, config, 4)

        self.assertTrue(fallback)
        self.assertEqual(candidates.tolist(), [3, 5, 7])

    def test_filter_minimal_threshold(self):
        """Testing filter_candidates with tau of 1"""
        config = SearchConfig(k=2, budget_ratio=1.0, min_collision_ratio=0.1)
        scratch = ScoreScratch(10)
        scratch.add(np.array([9, 2, 6]), 1)

        candidates, tau, fallback = filter_candidates(scratch, config, 4)

        self.assertEqual(tau, 1)
        self.assertFalse(fallback)
        self.assertEqual(candidates.tolist(), [2, 6, 9])

    def test_scores_match_naive_lists(self):
        """Testing CSR scoring against a naive walk of the same cells"""
        data = clustered(600, 16, seed=4)
        index = build_index(data, 4, 5, kmeans_iters=5)
        queries = isotropic(5, 16, seed=9).data * 4
        assignments = [assign_cells(index.data.data, index.codebooks, m)
                       for m in range(index.m)]

        for mode in SearchMode:
            config = SearchConfig(k=3, budget_ratio=0.1,
                                  min_collision_ratio=0.5, mode=mode)
            budget = config.budget(index.n)

            for q in queries:
                pq = index.prepare_query(q)
                scratch = ScoreScratch(index.n)
                expected = np.zeros(index.n, dtype=np.int64)

                for m in range(index.m):
                    left_slice, right_slice = \
                        index.codebooks.subspace_bounds(m)
                    q_sub = pq[left_slice.start:right_slice.stop]
                    args = (q_sub, index.codebooks.centroids_left[m],
                            index.codebooks.centroids_right[m])

                    accumulate_subspace(CellCursor.for_query(*args),
                                        index.postings, m, scratch, config,
                                        budget)

                    retrieved = 0

                    for cell, _cost, rank in CellCursor.for_query(*args):
                        if retrieved >= budget:
                            break

                        members = [i for i in range(index.n)
                                   if assignments[m][i] == cell]

                        if members:
                            if mode == SearchMode.OPTIMIZED and rank <= 3:
                                weight = 2
                            else:
                                weight = 1

                            for i in members:
                                expected[i] += weight

                            retrieved += len(members)

                self.assertEqual(scratch.scores.tolist(), expected.tolist())

    def test_weighted_at_least_binary(self):
        """Testing optimized scores are never below guaranteed scores"""
        index = build_index(clustered(500, 16, seed=6), 4, 5, kmeans_iters=5)
        pq = index.prepare_query(isotropic(1, 16, seed=2).data[0])
        scores = {}

        for mode in SearchMode:
            config = SearchConfig(k=4, budget_ratio=0.2,
                                  min_collision_ratio=0.5, mode=mode)
            scratch = ScoreScratch(index.n)
            collect_candidates(index, pq, config, scratch, SearchStats())
            scores[mode] = scratch.scores.copy()

        self.assertTrue((scores[SearchMode.OPTIMIZED] >=
                         scores[SearchMode.GUARANTEED]).all())


class VerificationTests(TestCase):
    """Unit tests for Hamming re-ranking and ADSampling."""

    def test_hamming_rerank_identical_first(self):
        """Testing hamming_rerank puts a matching code first"""
        q = np.array([1.0, -1.0, 1.0, -1.0])
        data = np.array([-q, q * 2, [1.0, 1.0, 1.0, 1.0]])

        ordered = hamming_rerank(np.array([0, 1, 2]), binarize(q),
                                 binarize_rows(data))

        self.assertEqual(ordered.tolist(), [1, 2, 0])

    def test_hamming_rerank_stable(self):
        """Testing hamming_rerank keeps the order of tied candidates"""
        data = np.ones((4, 8))

        ordered = hamming_rerank(np.array([3, 0, 2]),
                                 binarize(np.ones(8)),
                                 binarize_rows(data))

        self.assertEqual(ordered.tolist(), [3, 0, 2])

    def test_hamming_rerank_matches_naive(self):
        """Testing hamming_rerank against a per-bit counter"""
        rng = np.random.default_rng(5)
        data = rng.standard_normal((300, 128))
        q = rng.standard_normal(128)
        candidates = np.sort(rng.choice(300, size=100, replace=False))

        ordered = hamming_rerank(candidates, binarize(q), binarize_rows(data))

        def _bits(x):
            return [1 if v > 0 else 0 for v in x]

        q_bits = _bits(q)
        naive = sorted(
            candidates.tolist(),
            key=lambda i: sum(a != b for a, b in zip(_bits(data[i]), q_bits)))
        self.assertEqual(ordered.tolist(), naive)

    def test_adsampling_prunes(self):
        """Testing adsampling_verify prunes at the first checkpoint"""
        q = np.zeros(64, dtype=np.float32)
        x = np.zeros(64, dtype=np.float32)
        x[:32] = math.sqrt(100.0 / 32)
        x[32:] = 5.0

        dist, scanned = adsampling_verify(q, x, 10.0, 2.1, 32)

        self.assertIsNone(dist)
        self.assertEqual(scanned, 32)

        dims, ratios = _checkpoints(64, 32, 2.1)
        self.assertEqual(dims.tolist(), [32])
        self.assertAlmostEqual(10.0 * ratios[0],
                               10.0 * 0.5 * (1 + 2.1 / math.sqrt(32)) ** 2)
        self.assertLess(10.0 * ratios[0], 100.0)

    def test_adsampling_exact_without_bound(self):
        """Testing adsampling_verify with an infinite bound or huge margin"""
        rng = np.random.default_rng(6)
        q = rng.standard_normal(100).astype(np.float32)
        x = rng.standard_normal(100).astype(np.float32)
        exact = float(((x.astype(np.float64) - q) ** 2).sum())

        dist, scanned = adsampling_verify(q, x, math.inf, 2.1, 32)
        self.assertAlmostEqual(dist, exact, delta=exact * 1e-9)
        self.assertEqual(scanned, 100)

        dist, scanned = adsampling_verify(q, x, 1e-6, 1e9, 32)
        self.assertAlmostEqual(dist, exact, delta=exact * 1e-9)
        self.assertEqual(scanned, 100)

    def test_adsampling_keeps_close(self):
        """Testing adsampling_verify returns distances below the bound"""
        q = np.zeros(64, dtype=np.float32)
        x = np.full(64, 0.1, dtype=np.float32)

        dist, _scanned = adsampling_verify(q, x, 10.0, 2.1, 32)

        self.assertAlmostEqual(dist, 0.64, places=5)

    def test_patience(self):
        """Testing verify_adaptive stops after too many stale candidates"""
        data = np.zeros((5, 64), dtype=np.float32)
        data[:, 0] = np.arange(5)
        config = SearchConfig(k=1, budget_ratio=1.0, min_collision_ratio=1.0,
                              patience_factor=2.0)
        stats = SearchStats()

        ids, dists = verify_adaptive(data, np.zeros(64, dtype=np.float32),
                                     np.arange(5), config, stats)

        self.assertEqual(ids.tolist(), [0])
        self.assertEqual(dists.tolist(), [0.0])
        self.assertEqual(stats.verified, 3)
        self.assertEqual(stats.pruned, 2)
        self.assertTrue(stats.patience_terminated)

    def test_first_k_never_pruned(self):
        """Testing verify_adaptive keeps the first k candidates"""
        data = np.zeros((3, 64), dtype=np.float32)
        data[:, 0] = [9.0, 8.0, 7.0]
        config = SearchConfig(k=3, budget_ratio=1.0, min_collision_ratio=1.0)
        stats = SearchStats()

        ids, _dists = verify_adaptive(data, np.zeros(64, dtype=np.float32),
                                      np.arange(3), config, stats)

        self.assertEqual(ids.tolist(), [2, 1, 0])
        self.assertEqual(stats.pruned, 0)


class SearchTests(TestCase):
    """Unit tests for search and search_batch."""

    def test_full_coverage_matches_brute_force(self):
        """Testing guaranteed search with full coverage against brute force
        """
        config = SearchConfig(k=10, budget_ratio=1.0,
                              min_collision_ratio=0.01,
                              mode=SearchMode.GUARANTEED)
        seed = 0

        for d in (8, 32, 64, 130):
            for _ in range(5):
                seed += 1
                rng = np.random.default_rng(seed)
                n = int(rng.integers(100, 400))
                data = isotropic(n, d, seed=seed)
                queries = isotropic(4, d, seed=seed + 1000)
                gt = brute_force_knn(data, queries, 10)

                index = build_index(data, 2, 1, seed=seed, copy=True)
                results = search_batch(index, queries, config)

                for qi, result in enumerate(results):
                    self.assertEqual(result.stats.candidates, n)
                    self.assertEqual(result.ids.tolist(),
                                     gt.ids[qi].tolist())
                    self.assertTrue(np.allclose(result.distances,
                                                gt.distances[qi],
                                                rtol=1e-4, atol=1e-5))

    def test_mode_consistency(self):
        """Testing optimized verification without pruning matches
        guaranteed verification on the same candidates
        """
        for seed in range(10):
            data = clustered(400, 32, seed=seed)
            index = build_index(data, 4, 4, seed=seed, kmeans_iters=5)
            guaranteed = SearchConfig(k=5, budget_ratio=0.2,
                                      min_collision_ratio=0.5,
                                      mode=SearchMode.GUARANTEED)
            optimized = guaranteed.replace(mode=SearchMode.OPTIMIZED,
                                           patience_factor=math.inf,
                                           eps0=1e9)
            pq = index.prepare_query(isotropic(1, 32, seed=seed).data[0])
            scratch = ScoreScratch(index.n)
            candidates = collect_candidates(index, pq, guaranteed, scratch,
                                            SearchStats())

            exact_ids, exact_dists = verify_exact(
                index.data.data, pq, candidates, 5, SearchStats())
            adaptive_ids, adaptive_dists = verify_adaptive(
                index.data.data, pq,
                hamming_rerank(candidates, index.query_code(pq),
                               index.binary_codes),
                optimized, SearchStats())

            self.assertEqual(sorted(exact_ids.tolist()),
                             sorted(adaptive_ids.tolist()))
            self.assertTrue(np.allclose(exact_dists, adaptive_dists,
                                        rtol=1e-6))

    def test_optimized_full_search_exact(self):
        """Testing optimized search without pruning returns exact
        distances
        """
        data = isotropic(300, 32, seed=3)
        index = build_index(data, 2, 4, kmeans_iters=5, copy=True)
        config = SearchConfig(k=5, budget_ratio=0.5, min_collision_ratio=0.5,
                              patience_factor=None, eps0=1e9)
        q = isotropic(1, 32, seed=30).data[0]

        result = search(index, q, config)

        expected = ((data.data[result.ids].astype(np.float64) - q) ** 2
                    ).sum(axis=1)
        self.assertTrue(np.allclose(result.distances, expected, rtol=1e-4))
        self.assertEqual(result.stats.pruned, 0)
        self.assertEqual(result.distances.tolist(),
                         sorted(result.distances.tolist()))

    def test_self_query(self):
        """Testing guaranteed search finds a stored point first"""
        data = clustered(500, 16, seed=8)
        index = build_index(data, 4, 6, kmeans_iters=5,
                            policy=RotationPolicy.NEVER, copy=True)
        config = SearchConfig(k=5, budget_ratio=0.05,
                              min_collision_ratio=0.5,
                              mode=SearchMode.GUARANTEED)

        for point_id in (0, 123, 499):
            result = search(index, data.data[point_id], config)

            self.assertEqual(result.ids[0], point_id)
            self.assertEqual(result.distances[0], 0.0)

    def test_recall_non_decreasing_in_budget(self):
        """Testing guaranteed recall grows with the budget"""
        data, queries = generate_base_and_queries('isotropic', n=20_000,
                                                  queries=20, d=64, seed=12)
        gt = brute_force_knn(data, queries, 10)
        index = build_index(data, 4, 50, copy=True)
        recalls = []

        for budget_ratio in (0.01, 0.05, 0.2, 1.0):
            config = SearchConfig(k=10, budget_ratio=budget_ratio,
                                  min_collision_ratio=0.01,
                                  mode=SearchMode.GUARANTEED)
            results = search_batch(index, queries, config)
            recalls.append(recall_at_k([r.ids for r in results], gt, 10))

        self.assertEqual(recalls, sorted(recalls))
        self.assertGreaterEqual(recalls[-1], 0.99)

    def test_optimized_on_correlated_data(self):
        """Testing optimized mode on correlated data reaches high recall
        while verifying a small share of the points
        """
        data, queries = generate_base_and_queries('correlated', n=20_000,
                                                  queries=30, d=64,
                                                  rank=12, seed=21)
        gt = brute_force_knn(data, queries, 100)
        index = build_index(data, 8, 50, copy=True)

        self.assertGreater(index.rotation.cev, 0.9)

        outcomes = []

        for budget_ratio, min_collision_ratio in itertools.product(
                (0.01, 0.02, 0.05), (0.1, 0.2)):
            config = SearchConfig(k=100, budget_ratio=budget_ratio,
                                  min_collision_ratio=min_collision_ratio,
                                  mode=SearchMode.OPTIMIZED)
            results = search_batch(index, queries, config)
            recall = recall_at_k([r.ids for r in results], gt, 100)
            verified = np.mean([r.stats.verified for r in results]) / index.n

            self.assertLessEqual(
                max(r.stats.verified for r in results),
                max(r.stats.candidates for r in results))
            outcomes.append((recall, verified))

        self.assertTrue(
            any(recall >= 0.90 and verified <= 0.20
                for recall, verified in outcomes),
            outcomes)

    def test_batch_workers(self):
        """Testing search_batch returns the same results with workers"""
        data = clustered(400, 16, seed=1)
        index = build_index(data, 2, 5, kmeans_iters=5)
        queries = isotropic(12, 16, seed=2)
        config = SearchConfig(k=5, budget_ratio=0.1, min_collision_ratio=0.5)

        serial = search_batch(index, queries, config)
        parallel = search_batch(index, queries, config, workers=4)

        self.assertEqual([r.ids.tolist() for r in serial],
                         [r.ids.tolist() for r in parallel])

    def test_scratch_reused(self):
        """Testing search leaves the scratch space clean"""
        index = build_index(clustered(200, 8, seed=0), 2, 3, kmeans_iters=3)
        scratch = ScoreScratch(index.n)
        config = SearchConfig(k=3, budget_ratio=0.3, min_collision_ratio=0.5)

        first = search(index, np.zeros(8), config, scratch=scratch)
        self.assertFalse(scratch.scores.any())

        second = search(index, np.zeros(8), config, scratch=scratch)
        self.assertEqual(first.ids.tolist(), second.ids.tolist())

    def test_errors(self):
        """Testing search with invalid k and query dimensions"""
        index = build_index(clustered(50, 8, seed=0), 2, 3, kmeans_iters=3)

        with self.assertRaises(InvalidArgumentError):
            search(index, np.zeros(8),
                   SearchConfig(k=51, budget_ratio=0.5,
                                min_collision_ratio=0.5))

        with self.assertRaises(InvalidArgumentError):
            search_batch(index, DatasetMatrix(np.zeros((2, 7))),
                         SearchConfig(k=1, budget_ratio=0.5,
                                      min_collision_ratio=0.5))
