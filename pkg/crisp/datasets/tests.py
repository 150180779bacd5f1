from __future__ import annotations

import os
import shutil
import struct
import tempfile
from unittest import TestCase

import numpy as np

from crisp.datasets.groundtruth import (brute_force_knn,
                                        recall_at_k,
                                        top_k_ascending)
from crisp.datasets.io import load_fvecs, load_ivecs, save_fvecs, save_ivecs
from crisp.datasets.synthetic import (GENERATORS,
                                      axis_concentrated,
                                      generate_base_and_queries)
from crisp.datasets.types import DatasetMatrix, GroundTruth
from crisp.errors import DatasetFormatError, InvalidArgumentError


class VecsFileTests(TestCase):
    """Unit tests for reading and writing fvecs/ivecs files."""

    def setUp(self):
        super().setUp()

        self.tempdir = tempfile.mkdtemp(prefix='crisp-tests')

    def tearDown(self):
        shutil.rmtree(self.tempdir)

        super().tearDown()

    def _write_raw(self, name, raw):
        path = os.path.join(self.tempdir, name)

        with open(path, 'wb') as fp:
            fp.write(raw)

        return path

    def test_load_fvecs(self):
        """Testing load_fvecs with two 2-dimensional records"""
        path = self._write_raw(
            'data.fvecs',
            struct.pack('<iff', 2, 1.0, 2.0) +
            struct.pack('<iff', 2, 3.0, 4.0))

        dataset = load_fvecs(path)

        self.assertEqual(dataset.n, 2)
        self.assertEqual(dataset.d, 2)
        self.assertEqual(dataset.data.dtype, np.float32)
        self.assertEqual(dataset.data.ravel().tolist(), [1.0, 2.0, 3.0, 4.0])

    def test_load_fvecs_empty(self):
        """Testing load_fvecs with an empty file"""
        dataset = load_fvecs(self._write_raw('empty.fvecs', b''))

        self.assertEqual(dataset.n, 0)
        self.assertEqual(dataset.d, 0)

    def test_load_fvecs_mixed_dimensions(self):
        """Testing load_fvecs with records of different dimensions"""
        path = self._write_raw(
            'mixed.fvecs',
            struct.pack('<iff', 2, 1.0, 2.0) +
            struct.pack('<ifff', 3, 1.0, 2.0, 3.0))

        with self.assertRaises(DatasetFormatError) as cm:
            load_fvecs(path)

        self.assertEqual(cm.exception.record, 1)
        self.assertEqual(cm.exception.filename, path)

    def test_load_fvecs_mixed_dimensions_aligned(self):
        """Testing load_fvecs with a mismatched dimension that still fits
        the file size
        """
        path = self._write_raw(
            'mixed.fvecs',
            struct.pack('<iff', 2, 1.0, 2.0) +
            struct.pack('<iff', 2, 3.0, 4.0) +
            struct.pack('<iff', 7, 5.0, 6.0))

        with self.assertRaises(DatasetFormatError) as cm:
            load_fvecs(path)

        self.assertEqual(cm.exception.record, 2)

    def test_load_fvecs_truncated(self):
        """Testing load_fvecs with a truncated final record"""
        path = self._write_raw(
            'truncated.fvecs',
            struct.pack('<iff', 2, 1.0, 2.0) + struct.pack('<i', 2))

        with self.assertRaises(DatasetFormatError) as cm:
            load_fvecs(path)

        self.assertEqual(cm.exception.record, 1)

    def test_load_fvecs_non_finite(self):
        """Testing load_fvecs with NaN and infinite components"""
        for value in (float('nan'), float('inf')):
            path = self._write_raw(
                'non-finite.fvecs',
                struct.pack('<iff', 2, 1.0, 2.0) +
                struct.pack('<iff', 2, value, 4.0))

            with self.assertRaises(DatasetFormatError) as cm:
                load_fvecs(path)

            self.assertEqual(cm.exception.filename, path)

    def test_load_fvecs_missing(self):
        """Testing load_fvecs with a missing file"""
        with self.assertRaises(OSError):
            load_fvecs(os.path.join(self.tempdir, 'missing.fvecs'))

    def test_save_fvecs(self):
        """Testing save_fvecs writes the file load_fvecs reads"""
        rng = np.random.default_rng(3)
        dataset = DatasetMatrix(rng.standard_normal((17, 5)))
        path = os.path.join(self.tempdir, 'data.fvecs')

        save_fvecs(dataset, path)

        self.assertEqual(os.path.getsize(path), 17 * 4 * 6)

        loaded = load_fvecs(path)
        self.assertTrue(np.array_equal(loaded.data, dataset.data))

        # Saving the loaded copy must reproduce the file byte-for-byte.
        path2 = os.path.join(self.tempdir, 'data2.fvecs')
        save_fvecs(loaded, path2)

        with open(path, 'rb') as fp1, open(path2, 'rb') as fp2:
            self.assertEqual(fp1.read(), fp2.read())

    def test_save_ivecs(self):
        """Testing save_ivecs byte layout"""
        path = os.path.join(self.tempdir, 'gt.ivecs')

        save_ivecs(GroundTruth(np.array([[5, 9]])), path)

        with open(path, 'rb') as fp:
            self.assertEqual(
                fp.read(),
                b'\x02\x00\x00\x00\x05\x00\x00\x00\x09\x00\x00\x00')

        self.assertEqual(load_ivecs(path).ids.tolist(), [[5, 9]])

    def test_save_ivecs_empty(self):
        """Testing save_ivecs with no queries"""
        path = os.path.join(self.tempdir, 'gt.ivecs')

        save_ivecs(GroundTruth(np.zeros((0, 4), dtype=np.int32)), path)

        self.assertEqual(os.path.getsize(path), 0)

    def test_save_ivecs_unwritable(self):
        """Testing save_ivecs with a path in a missing directory"""
        with self.assertRaises(OSError):
            save_ivecs(GroundTruth(np.array([[1]])),
                       os.path.join(self.tempdir, 'nope', 'gt.ivecs'))


class DatasetMatrixTests(TestCase):
    """Unit tests for DatasetMatrix and GroundTruth."""

    def test_rejects_non_finite(self):
        """Testing DatasetMatrix with NaN values"""
        with self.assertRaises(InvalidArgumentError):
            DatasetMatrix(np.array([[1.0, np.nan]]))

    def test_rejects_1d(self):
        """Testing DatasetMatrix with a 1D array"""
        with self.assertRaises(InvalidArgumentError):
            DatasetMatrix(np.zeros(4))

    def test_ground_truth_validate(self):
        """Testing GroundTruth.validate with bad IDs"""
        with self.assertRaises(InvalidArgumentError):
            GroundTruth(np.array([[0, 5]])).validate(5)

        with self.assertRaises(InvalidArgumentError):
            GroundTruth(np.array([[1, 1]])).validate(5)

        GroundTruth(np.array([[0, 4]])).validate(5)


class BruteForceTests(TestCase):
    """Unit tests for brute_force_knn."""

    def test_small_example(self):
        """Testing brute_force_knn with a three-point dataset"""
        data = DatasetMatrix(np.array([[0, 0], [3, 4], [1, 1]]))
        queries = DatasetMatrix(np.array([[0, 0]]))

        gt = brute_force_knn(data, queries, 2)

        self.assertEqual(gt.ids.tolist(), [[0, 2]])
        self.assertEqual(gt.distances.tolist(), [[0.0, 2.0]])

    def test_k_equals_n(self):
        """Testing brute_force_knn with k equal to the dataset size"""
        data = DatasetMatrix(np.array([[0, 0], [3, 4], [1, 1]]))
        queries = DatasetMatrix(np.array([[0, 0]]))

        gt = brute_force_knn(data, queries, 3)

        self.assertEqual(gt.ids.tolist(), [[0, 2, 1]])

    def test_ties_by_ascending_id(self):
        """Testing brute_force_knn breaks distance ties by ascending ID"""
        data = DatasetMatrix(np.array([[1, 0], [0, 1], [-1, 0], [0, -1],
                                       [5, 5]]))
        queries = DatasetMatrix(np.array([[0, 0]]))

        gt = brute_force_knn(data, queries, 3)

        self.assertEqual(gt.ids.tolist(), [[0, 1, 2]])

    def test_k_too_large(self):
        """Testing brute_force_knn with k larger than the dataset"""
        data = DatasetMatrix(np.zeros((3, 2)))

        with self.assertRaises(InvalidArgumentError):
            brute_force_knn(data, DatasetMatrix(np.zeros((1, 2))), 4)

    def test_matches_double_loop(self):
        """Testing brute_force_knn against a plain double-loop scan"""
        rng = np.random.default_rng(11)
        data = DatasetMatrix(rng.standard_normal((200, 16)))
        queries = DatasetMatrix(rng.standard_normal((5, 16)))

        gt = brute_force_knn(data, queries, 10, workers=3)

        for qi in range(queries.n):
            q = queries.data[qi].astype(np.float64)
            scored = []

            for i in range(data.n):
                total = 0.0

                for j in range(data.d):
                    diff = float(data.data[i, j]) - q[j]
                    total += diff * diff

                scored.append((total, i))

            scored.sort()
            self.assertEqual(gt.ids[qi].tolist(),
                             [i for _dist, i in scored[:10]])

    def test_top_k_ascending_with_tied_boundary(self):
        """Testing top_k_ascending with ties at the k-th distance"""
        dists = np.array([3.0, 1.0, 1.0, 1.0, 0.5])
        ids = np.array([10, 40, 20, 30, 50])

        pos = top_k_ascending(dists, ids, 3)

        self.assertEqual(ids[pos].tolist(), [50, 20, 30])


class RecallTests(TestCase):
    """Unit tests for recall_at_k."""

    def test_identity(self):
        """Testing recall_at_k of the ground truth against itself"""
        gt = GroundTruth(np.array([[1, 2, 3], [4, 5, 6]]))

        self.assertEqual(recall_at_k(gt.ids.tolist(), gt, 3), 1.0)

    def test_disjoint(self):
        """Testing recall_at_k with disjoint results"""
        gt = GroundTruth(np.array([[1, 2, 3]]))

        self.assertEqual(recall_at_k([[7, 8, 9]], gt, 3), 0.0)

    def test_partial_overlap(self):
        """Testing recall_at_k with three of four IDs correct"""
        gt = GroundTruth(np.array([[1, 2, 3, 4]]))

        self.assertEqual(recall_at_k([[1, 2, 9, 4]], gt, 4), 0.75)

    def test_empty_row(self):
        """Testing recall_at_k with an empty result row"""
        gt = GroundTruth(np.array([[1, 2], [3, 4]]))

        self.assertEqual(recall_at_k([[1, 2], []], gt, 2), 0.5)

    def test_query_count_mismatch(self):
        """Testing recall_at_k with the wrong number of result rows"""
        gt = GroundTruth(np.array([[1, 2]]))

        with self.assertRaises(InvalidArgumentError):
            recall_at_k([[1], [2]], gt, 2)


class SyntheticTests(TestCase):
    """Unit tests for the synthetic dataset generators."""

    def test_deterministic(self):
        """Testing every generator returns the same data for a seed"""
        for name, generator in GENERATORS.items():
            a = generator(50, 8, seed=4)
            b = generator(50, 8, seed=4)

            self.assertEqual(a.data.shape, (50, 8), name)
            self.assertTrue(np.array_equal(a.data, b.data), name)

    def test_axis_concentrated(self):
        """Testing axis_concentrated leaves trailing axes at zero"""
        dataset = axis_concentrated(20, 6, active_dims=2)

        self.assertFalse(dataset.data[:, 2:].any())
        self.assertTrue(dataset.data[:, :2].any())

    def test_base_and_queries(self):
        """Testing generate_base_and_queries splits one draw"""
        base, queries = generate_base_and_queries(
            'isotropic', n=30, queries=5, d=4, seed=2)
        combined = GENERATORS['isotropic'](35, 4, seed=2)

        self.assertTrue(np.array_equal(base.data, combined.data[:30]))
        self.assertTrue(np.array_equal(queries.data, combined.data[30:]))

    def test_unknown_kind(self):
        """Testing generate_base_and_queries with an unknown kind"""
        with self.assertRaises(InvalidArgumentError):
            generate_base_and_queries('spiral', n=1, queries=1, d=1)
