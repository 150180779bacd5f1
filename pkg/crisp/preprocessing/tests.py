from __future__ import annotations

import tracemalloc
from unittest import TestCase

import numpy as np

from crisp.datasets.synthetic import axis_concentrated, correlated, isotropic
from crisp.datasets.types import DatasetMatrix
from crisp.errors import InvalidArgumentError
from crisp.preprocessing.cev import (compute_cev,
                                     covariance_eigenvalues,
                                     sample_rows,
                                     sample_size,
                                     top_component_count)
from crisp.preprocessing.rotation import (RotationPolicy,
                                          RotationRecord,
                                          apply_rotation_in_place,
                                          generate_rotation,
                                          maybe_rotate,
                                          rotate_query)


def _pairwise_squared(data):
    diff = data[:, None, :].astype(np.float64) - data[None, :, :]

    return (diff ** 2).sum(axis=2)


class CEVTests(TestCase):
    """Unit tests for the spectral concentration check."""

    def test_sample_size(self):
        """Testing sample_size bounds"""
        self.assertEqual(sample_size(7), 7)
        self.assertEqual(sample_size(10), 10)
        self.assertEqual(sample_size(11), 2)
        self.assertEqual(sample_size(5000), 500)
        self.assertEqual(sample_size(5_000_000), 100_000)

    def test_sample_rows_deterministic(self):
        """Testing sample_rows returns sorted rows for a fixed seed"""
        dataset = isotropic(1000, 4, seed=1)

        a = sample_rows(dataset, seed=9)
        b = sample_rows(dataset, seed=9)

        self.assertEqual(a.n, 100)
        self.assertTrue(np.array_equal(a.data, b.data))

    def test_top_component_count(self):
        """Testing top_component_count never drops below 1"""
        self.assertEqual(top_component_count(1), 1)
        self.assertEqual(top_component_count(4), 1)
        self.assertEqual(top_component_count(10), 2)
        self.assertEqual(top_component_count(128), 25)

    def test_isotropic(self):
        """Testing compute_cev with isotropic data"""
        cev = compute_cev(isotropic(20_000, 10, seed=5))

        self.assertAlmostEqual(cev, 0.2, delta=0.05)

    def test_axis_concentrated(self):
        """Testing compute_cev with all variance on one axis"""
        cev = compute_cev(axis_concentrated(2000, 10, seed=5))

        self.assertGreaterEqual(cev, 0.999)

    def test_constant(self):
        """Testing compute_cev with constant data"""
        self.assertEqual(compute_cev(DatasetMatrix(np.ones((20, 5)))), 0.0)

    def test_too_few_rows(self):
        """Testing compute_cev with a single row"""
        with self.assertRaises(InvalidArgumentError):
            compute_cev(DatasetMatrix(np.ones((1, 5))))

    def test_eigenvalues_sum_to_trace(self):
        """Testing covariance_eigenvalues sums to the covariance trace"""
        for sample in (isotropic(3000, 32, seed=1),
                       correlated(3000, 32, rank=6, seed=2),
                       axis_concentrated(500, 8, seed=3)):
            eigenvalues = covariance_eigenvalues(sample)
            trace = np.trace(np.cov(sample.data, rowvar=False,
                                    dtype=np.float64))

            self.assertEqual(eigenvalues.shape, (sample.d,))
            self.assertTrue((np.diff(eigenvalues) <= 0).all())
            self.assertLessEqual(abs(eigenvalues.sum() - trace),
                                 1e-6 * trace)


class RotationTests(TestCase):
    """Unit tests for the randomized rotation."""

    def test_orthogonal(self):
        """Testing generate_rotation returns an orthogonal matrix"""
        for d in (1, 2, 8, 64, 256):
            matrix = generate_rotation(d, seed=d)

            self.assertEqual(matrix.shape, (d, d))
            self.assertLessEqual(
                np.abs(matrix.T @ matrix - np.eye(d)).max(), 1e-10,
                'd=%d' % d)

    def test_deterministic(self):
        """Testing generate_rotation is deterministic per seed"""
        self.assertTrue(np.array_equal(generate_rotation(16, 3),
                                       generate_rotation(16, 3)))
        self.assertFalse(np.array_equal(generate_rotation(16, 3),
                                        generate_rotation(16, 4)))

    def test_invalid_dimension(self):
        """Testing generate_rotation with a dimension of 0"""
        with self.assertRaises(InvalidArgumentError):
            generate_rotation(0, seed=0)

    def test_preserves_distances(self):
        """Testing apply_rotation_in_place preserves pairwise distances"""
        dataset = isotropic(60, 24, seed=2)
        before = _pairwise_squared(dataset.data)

        apply_rotation_in_place(dataset.data,
                                generate_rotation(24, 8).astype(np.float32),
                                workers=4)

        after = _pairwise_squared(dataset.data)
        self.assertTrue(np.allclose(before, after, rtol=1e-4, atol=1e-4))

    def test_workers_agree(self):
        """Testing apply_rotation_in_place gives the same rows with workers"""
        matrix = generate_rotation(12, 1).astype(np.float32)
        a = isotropic(101, 12, seed=6).data
        b = a.copy()

        apply_rotation_in_place(a, matrix)
        apply_rotation_in_place(b, matrix, workers=3)

        self.assertTrue(np.array_equal(a, b))

    def test_in_place_allocation(self):
        """Testing apply_rotation_in_place doesn't copy the dataset"""
        data = isotropic(4000, 64, seed=0).data
        matrix = generate_rotation(64, 0).astype(np.float32)

        tracemalloc.start()

        try:
            apply_rotation_in_place(data, matrix)
            _current, peak = tracemalloc.get_traced_memory()
        finally:
            tracemalloc.stop()

        self.assertLess(peak, data.nbytes // 16)

    def test_maybe_rotate_adaptive_rotates(self):
        """Testing maybe_rotate rotates concentrated data"""
        dataset = axis_concentrated(500, 16, seed=3)
        original = dataset.data.copy()

        record = maybe_rotate(dataset, 0.85, seed=7)

        self.assertTrue(record.applied)
        self.assertGreater(record.cev, 0.85)
        self.assertIsNotNone(record.matrix)
        self.assertTrue(np.allclose(dataset.data, original @ record.matrix,
                                    atol=1e-5))

    def test_maybe_rotate_adaptive_bypasses(self):
        """Testing maybe_rotate leaves isotropic data alone"""
        dataset = isotropic(500, 16, seed=3)
        original = dataset.data.copy()

        record = maybe_rotate(dataset, 0.85, seed=7)

        self.assertFalse(record.applied)
        self.assertIsNone(record.matrix)
        self.assertTrue(np.array_equal(dataset.data, original))

    def test_maybe_rotate_threshold_is_strict(self):
        """Testing maybe_rotate doesn't rotate when CEV equals the
        threshold
        """
        dataset = axis_concentrated(100, 5, seed=0)

        record = maybe_rotate(dataset, 1.0, seed=0)

        self.assertFalse(record.applied)

    def test_maybe_rotate_policies(self):
        """Testing maybe_rotate with forced policies"""
        always = maybe_rotate(isotropic(200, 8, seed=1), 0.85, seed=1,
                              policy=RotationPolicy.ALWAYS)
        never = maybe_rotate(axis_concentrated(200, 8, seed=1), 0.85,
                             seed=1, policy='never')

        self.assertTrue(always.applied)
        self.assertFalse(never.applied)
        self.assertGreater(never.cev, 0.85)

    def test_maybe_rotate_empty(self):
        """Testing maybe_rotate with an empty dataset"""
        with self.assertRaises(InvalidArgumentError):
            maybe_rotate(DatasetMatrix.empty())

    def test_rotate_query(self):
        """Testing rotate_query matches the rotated data"""
        dataset = axis_concentrated(300, 8, seed=2)
        original = dataset.data.copy()
        record = maybe_rotate(dataset, 0.5, seed=2)

        self.assertTrue(record.applied)
        self.assertTrue(np.allclose(rotate_query(original[5], record),
                                    dataset.data[5], atol=1e-5))

        with self.assertRaises(InvalidArgumentError):
            rotate_query(np.zeros(7), record)

    def test_record_requires_matrix(self):
        """Testing RotationRecord with a missing matrix"""
        with self.assertRaises(InvalidArgumentError):
            RotationRecord(d=4, cev=0.9, applied=True, seed=0)

        with self.assertRaises(InvalidArgumentError):
            RotationRecord(d=4, cev=0.1, applied=False, seed=0,
                           matrix=np.eye(4))
