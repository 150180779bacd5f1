from __future__ import annotations

import os
import shutil
import struct
import tempfile
from unittest import TestCase

import numpy as np

from crisp.datasets.synthetic import axis_concentrated, clustered, isotropic
from crisp.datasets.types import DatasetMatrix
from crisp.errors import IndexFormatError, InvalidArgumentError
from crisp.index.binary import (binarize,
                                binarize_rows,
                                code_words,
                                hamming_distances)
from crisp.index.builder import (build_index,
                                 index_logical_bytes,
                                 padded_dimension)
from crisp.index.codebooks import (SubspaceCodebooks,
                                   assign_cell,
                                   assign_cells,
                                   check_partition,
                                   train_codebooks)
from crisp.index.kmeans import kmeans
from crisp.index.postings import CsrPostingIndex, build_postings
from crisp.index.storage import HEADER_OVERHEAD, load_index, save_index
from crisp.preprocessing.rotation import RotationPolicy


def _unpack_bits(code, d):
    raw = np.ascontiguousarray(code, dtype='<u8').view(np.uint8)

    return np.unpackbits(raw, bitorder='little')[:d]


def _small_index(n=300, d=16, m=2, k=4, seed=0, **kwargs):
    kwargs.setdefault('kmeans_iters', 5)

    return build_index(clustered(n, d, seed=seed), m, k, seed=seed,
                       **kwargs)


class KMeansTests(TestCase):
    """Unit tests for kmeans."""

    def test_two_clusters(self):
        """Testing kmeans with two obvious clusters"""
        points = np.array([[0.0], [1.0], [10.0], [11.0]])

        for seed in range(5):
            result = kmeans(points, 2, seed=seed)

            self.assertEqual(sorted(result.centroids[:, 0].tolist()),
                             [0.5, 10.5])
            self.assertAlmostEqual(result.objectives[-1], 1.0)

    def test_objective_non_increasing(self):
        """Testing kmeans objective never increases"""
        points = isotropic(500, 4, seed=8).data

        result = kmeans(points, 8, iters=30, seed=1)

        for before, after in zip(result.objectives, result.objectives[1:]):
            self.assertLessEqual(after, before * (1 + 1e-9))

    def test_identical_points(self):
        """Testing kmeans with more centroids than distinct points"""
        points = np.ones((6, 3))

        result = kmeans(points, 3, seed=0)

        self.assertEqual(result.centroids.shape, (3, 3))
        self.assertTrue(np.array_equal(result.centroids, np.ones((3, 3))))
        self.assertEqual(result.objectives[-1], 0.0)

    def test_deterministic(self):
        """Testing kmeans is deterministic for a seed"""
        points = isotropic(200, 3, seed=2).data

        a = kmeans(points, 5, seed=4)
        b = kmeans(points, 5, seed=4)

        self.assertTrue(np.array_equal(a.centroids, b.centroids))
        self.assertTrue(np.array_equal(a.labels, b.labels))

    def test_invalid(self):
        """Testing kmeans with no points or k of 0"""
        with self.assertRaises(InvalidArgumentError):
            kmeans(np.zeros((0, 2)), 1)

        with self.assertRaises(InvalidArgumentError):
            kmeans(np.zeros((3, 2)), 0)


class CodebookTests(TestCase):
    """Unit tests for subspace codebooks and cell assignment."""

    def test_assign_cell(self):
        """Testing assign_cell combines the nearest left and right
        centroids
        """
        left = np.array([[0.0, 0.0], [10.0, 10.0]])
        right = np.array([[0.0, 0.0], [5.0, 5.0]])

        self.assertEqual(assign_cell(np.array([9, 9, 1, 1]), left, right), 2)
        self.assertEqual(assign_cell(np.array([0, 1, 6, 4]), left, right), 1)
        self.assertEqual(assign_cell(np.array([8, 8, 4, 6]), left, right), 3)

    def test_assign_cell_tie(self):
        """Testing assign_cell sends ties to the lowest centroid"""
        left = np.array([[0.0], [2.0]])
        right = np.array([[-1.0], [1.0]])

        self.assertEqual(assign_cell(np.array([1.0, 0.0]), left, right), 0)

    def test_assign_cells_matches_assign_cell(self):
        """Testing assign_cells agrees with assign_cell"""
        data = isotropic(100, 8, seed=3).data
        codebooks = train_codebooks(data, 2, 3, seed=1, iters=5)

        for subspace in range(2):
            cells = assign_cells(data, codebooks, subspace)
            left_slice, right_slice = codebooks.subspace_bounds(subspace)

            for i in range(data.shape[0]):
                self.assertEqual(
                    cells[i],
                    assign_cell(data[i, left_slice.start:right_slice.stop],
                                codebooks.centroids_left[subspace],
                                codebooks.centroids_right[subspace]))

    def test_check_partition(self):
        """Testing check_partition with even and uneven splits"""
        self.assertEqual(check_partition(16, 4), 4)
        self.assertEqual(check_partition(2, 1), 2)

        for d, m in ((130, 4), (4, 3), (3, 2), (8, 0)):
            with self.assertRaises(InvalidArgumentError):
                check_partition(d, m)

    def test_train_codebooks_workers(self):
        """Testing train_codebooks gives the same result with workers"""
        data = isotropic(400, 8, seed=5).data

        a = train_codebooks(data, 2, 4, seed=3, iters=5)
        b = train_codebooks(data, 2, 4, seed=3, iters=5, workers=4)

        self.assertEqual(a, b)
        self.assertEqual(a.centroids_left.shape, (2, 4, 2))
        self.assertEqual(a.num_cells, 16)

    def test_train_codebooks_k_too_large(self):
        """Testing train_codebooks with fewer rows than centroids"""
        with self.assertRaises(InvalidArgumentError):
            train_codebooks(np.zeros((3, 4)), 1, 5)

    def test_non_finite(self):
        """Testing SubspaceCodebooks with NaN centroids"""
        left = np.zeros((1, 2, 1))
        right = np.zeros((1, 2, 1))
        right[0, 1, 0] = np.nan

        with self.assertRaises(InvalidArgumentError):
            SubspaceCodebooks(centroids_left=left, centroids_right=right)


class PostingTests(TestCase):
    """Unit tests for the CSR posting index."""

    def test_matches_naive_lists(self):
        """Testing build_postings against a map of lists"""
        rng = np.random.default_rng(12)
        assignments = rng.integers(0, 9, size=(3, 250))

        postings = build_postings(assignments, 9)

        self.assertEqual(postings.m, 3)
        self.assertEqual(postings.n, 250)
        self.assertEqual(postings.num_cells, 9)

        for subspace in range(3):
            naive = {cell: [] for cell in range(9)}

            for point, cell in enumerate(assignments[subspace]):
                naive[int(cell)].append(point)

            for cell in range(9):
                self.assertEqual(postings.cell(subspace, cell).tolist(),
                                 naive[cell])

            self.assertEqual(postings.cell_sizes(subspace).sum(), 250)
            self.assertEqual(sorted(postings.ids[subspace].tolist()),
                             list(range(250)))

    def test_built_index_matches_naive_lists(self):
        """Testing build_index postings against lists built with
        assign_cell
        """
        rng = np.random.default_rng(2024)

        for run in range(10):
            n = int(rng.integers(200, 800))
            m = int(rng.choice([1, 2, 4]))
            k = int(rng.integers(2, 6))
            d = 2 * m * int(rng.integers(1, 4))
            index = build_index(clustered(n, d, seed=run), m, k,
                                seed=run, kmeans_iters=4)
            stored = index.data.data
            half_width = index.padded_d // (2 * m)

            for subspace in range(m):
                naive = {cell: [] for cell in range(k * k)}
                start = subspace * 2 * half_width

                for point in range(n):
                    cell = assign_cell(
                        stored[point, start:start + 2 * half_width],
                        index.codebooks.centroids_left[subspace],
                        index.codebooks.centroids_right[subspace])
                    naive[cell].append(point)

                for cell in range(k * k):
                    self.assertEqual(index.postings.cell(subspace,
                                                         cell).tolist(),
                                     naive[cell],
                                     (run, subspace, cell))

    def test_empty_cells(self):
        """Testing build_postings with empty cells"""
        postings = build_postings(np.array([[3, 3, 0]]), 4)

        self.assertEqual(postings.offsets[0].tolist(), [0, 1, 1, 1, 3])
        self.assertEqual(postings.cell(0, 1).tolist(), [])
        self.assertEqual(postings.cell(0, 3).tolist(), [0, 1])

    def test_out_of_range(self):
        """Testing build_postings with an out-of-range cell"""
        with self.assertRaises(InvalidArgumentError):
            build_postings(np.array([[0, 4]]), 4)

    def test_bad_offsets(self):
        """Testing CsrPostingIndex with offsets that don't end at N"""
        with self.assertRaises(InvalidArgumentError):
            CsrPostingIndex(offsets=np.array([[0, 1, 1]]),
                            ids=np.array([[0, 1]]))

    def test_ids_out_of_range(self):
        """Testing CsrPostingIndex with ids outside [0, N)"""
        for ids in ([[0, 2]], [[-1, 1]]):
            with self.assertRaises(InvalidArgumentError):
                CsrPostingIndex(offsets=np.array([[0, 1, 2]]),
                                ids=np.array(ids))


class BinaryCodeTests(TestCase):
    """Unit tests for sign codes and Hamming distances."""

    def test_binarize(self):
        """Testing binarize sets bits for positive values"""
        code = binarize(np.array([1.0, -1.0, 0.0, 2.0]))

        self.assertEqual(code.dtype, np.uint64)
        self.assertEqual(code.tolist(), [9])

    def test_binarize_multiple_words(self):
        """Testing binarize with more than 64 dimensions"""
        x = -np.ones(130)
        x[0] = 1.0
        x[64] = 1.0
        x[129] = 1.0

        code = binarize(x)

        self.assertEqual(code_words(130), 3)
        self.assertEqual(code.tolist(), [1, 1, 2])
        self.assertEqual(np.flatnonzero(_unpack_bits(code, 130)).tolist(),
                         [0, 64, 129])

    def test_hamming_matches_naive(self):
        """Testing hamming_distances against a bit-by-bit count"""
        rng = np.random.default_rng(7)
        data = rng.standard_normal((40, 100))
        q = rng.standard_normal(100)

        distances = hamming_distances(binarize(q), binarize_rows(data))

        expected = [int(((row > 0) != (q > 0)).sum()) for row in data]
        self.assertEqual(distances.tolist(), expected)


class BuildIndexTests(TestCase):
    """Unit tests for build_index."""

    def test_build(self):
        """Testing build_index produces consistent components"""
        index = _small_index()

        self.assertEqual(index.n, 300)
        self.assertEqual(index.padded_d, 16)
        self.assertEqual(index.m, 2)
        self.assertEqual(index.k, 4)
        self.assertEqual(index.binary_codes.shape, (300, 1))

        # Every point sits in the cell its nearest centroids name.
        for subspace in range(index.m):
            cells = assign_cells(index.data.data, index.codebooks, subspace)

            for cell in range(index.codebooks.num_cells):
                members = index.postings.cell(subspace, cell)
                self.assertTrue((cells[members] == cell).all())

    def test_logs_cell_sizes(self):
        """Testing build_index logs posting list sizes at debug level"""
        with self.assertLogs('crisp.index.builder', 'DEBUG') as cm:
            index = _small_index(m=2, k=3)

        size_lines = [
            record.getMessage()
            for record in cm.records
            if record.getMessage().startswith('Subspace ')
        ]

        self.assertEqual(len(size_lines), 2)

        for subspace, line in enumerate(size_lines):
            sizes = index.postings.cell_sizes(subspace)

            self.assertEqual(sizes.sum(), 300)
            self.assertIn('largest %d' % sizes.max(), line)

    def test_padding(self):
        """Testing build_index pads D=130 for M=4"""
        data = isotropic(100, 130, seed=1)

        index = build_index(data, 4, 2, seed=0, kmeans_iters=3, copy=True)

        self.assertEqual(padded_dimension(130, 4), 136)
        self.assertEqual(index.padded_d, 136)
        self.assertEqual(index.original_d, 130)
        self.assertFalse(index.data.data[:, 130:].any())

        q = index.prepare_query(data.data[0])
        self.assertEqual(q.shape, (136,))
        self.assertFalse(q[130:].any())

    def test_no_padding(self):
        """Testing build_index refuses uneven splits without padding"""
        with self.assertRaises(InvalidArgumentError):
            build_index(isotropic(100, 130, seed=1), 4, 2, pad=False)

    def test_invalid(self):
        """Testing build_index with invalid arguments"""
        data = isotropic(10, 4)

        with self.assertRaises(InvalidArgumentError):
            build_index(data, 0, 2)

        with self.assertRaises(InvalidArgumentError):
            build_index(data, 1, 11)

    def test_copy(self):
        """Testing build_index with copy leaves the input alone"""
        data = axis_concentrated(200, 8, seed=2)
        original = data.data.copy()

        index = build_index(data, 2, 3, kmeans_iters=3, copy=True)

        self.assertTrue(index.rotation.applied)
        self.assertTrue(np.array_equal(data.data, original))

    def test_rotated_query_space(self):
        """Testing prepare_query moves a stored vector onto its rotated
        copy
        """
        data = axis_concentrated(200, 8, seed=2)
        original = data.data.copy()

        index = build_index(data, 2, 3, kmeans_iters=3)

        self.assertTrue(index.rotation.applied)
        self.assertTrue(np.allclose(index.prepare_query(original[17]),
                                    index.data.data[17], atol=1e-5))

    def test_deterministic(self):
        """Testing build_index is deterministic across worker counts"""
        tempdir = tempfile.mkdtemp(prefix='crisp-tests')

        try:
            paths = []

            for workers in (1, 1, 3):
                path = os.path.join(tempdir, 'index-%d' % len(paths))
                save_index(_small_index(seed=5, workers=workers,
                                        policy=RotationPolicy.ALWAYS),
                           path)
                paths.append(path)

            contents = []

            for path in paths:
                with open(path, 'rb') as fp:
                    contents.append(fp.read())

            self.assertEqual(contents[0], contents[1])
            self.assertEqual(contents[0], contents[2])
        finally:
            shutil.rmtree(tempdir)

    def test_logical_bytes(self):
        """Testing index_logical_bytes grows with N and the rotation"""
        data = isotropic(400, 16, seed=3)
        small = build_index(DatasetMatrix(data.data[:200]), 2, 4,
                            kmeans_iters=3, policy=RotationPolicy.NEVER,
                            copy=True)
        large = build_index(data, 2, 4, kmeans_iters=3,
                            policy=RotationPolicy.NEVER, copy=True)
        rotated = build_index(data, 2, 4, kmeans_iters=3,
                              policy=RotationPolicy.ALWAYS, copy=True)

        per_vector = 4 * 16 + 4 * 2 + 8 * 1
        self.assertEqual(index_logical_bytes(large) -
                         index_logical_bytes(small),
                         200 * per_vector)
        self.assertEqual(index_logical_bytes(rotated) -
                         index_logical_bytes(large),
                         4 * 16 * 16)


class IndexStorageTests(TestCase):
    """Unit tests for saving and loading indexes."""

    def setUp(self):
        super().setUp()

        self.tempdir = tempfile.mkdtemp(prefix='crisp-tests')
        self.path = os.path.join(self.tempdir, 'test.crisp')

    def tearDown(self):
        shutil.rmtree(self.tempdir)

        super().tearDown()

    def _patch(self, offset, raw):
        with open(self.path, 'r+b') as fp:
            fp.seek(offset)
            fp.write(raw)

    def test_save_and_load(self):
        """Testing load_index restores a saved index"""
        index = _small_index(policy=RotationPolicy.ALWAYS)
        save_index(index, self.path)

        loaded = load_index(self.path)

        self.assertEqual(loaded.rotation, index.rotation)
        self.assertEqual(loaded.codebooks, index.codebooks)
        self.assertEqual(loaded.postings, index.postings)
        self.assertTrue(np.array_equal(loaded.binary_codes,
                                       index.binary_codes))
        self.assertTrue(np.array_equal(loaded.data.data, index.data.data))
        self.assertEqual(loaded.original_d, index.original_d)

        path2 = os.path.join(self.tempdir, 'test2.crisp')
        save_index(loaded, path2)

        with open(self.path, 'rb') as fp1, open(path2, 'rb') as fp2:
            self.assertEqual(fp1.read(), fp2.read())

    def test_file_size(self):
        """Testing the saved size against index_logical_bytes"""
        for policy in (RotationPolicy.ALWAYS, RotationPolicy.NEVER):
            index = _small_index(policy=policy)
            save_index(index, self.path)

            overhead = os.path.getsize(self.path) - index_logical_bytes(index)
            self.assertEqual(overhead, HEADER_OVERHEAD)
            self.assertLessEqual(overhead, 1024)

    def test_bad_magic(self):
        """Testing load_index with the wrong magic"""
        save_index(_small_index(), self.path)
        self._patch(0, b'XXXX')

        with self.assertRaises(IndexFormatError):
            load_index(self.path)

    def test_bad_version(self):
        """Testing load_index with an unknown version"""
        save_index(_small_index(), self.path)
        self._patch(4, struct.pack('<I', 99))

        with self.assertRaises(IndexFormatError) as cm:
            load_index(self.path)

        self.assertIn('version', str(cm.exception))

    def test_truncated(self):
        """Testing load_index with a truncated file"""
        index = _small_index()
        save_index(index, self.path)
        size = os.path.getsize(self.path)

        for cut in (3, 20, size // 2, size - 1):
            save_index(index, self.path)

            with open(self.path, 'r+b') as fp:
                fp.truncate(cut)

            with self.assertRaises(IndexFormatError):
                load_index(self.path)

    def test_oversized_header(self):
        """Testing load_index with a header describing more data than the
        file holds
        """
        for n in (2 ** 42, 301):
            save_index(_small_index(), self.path)
            self._patch(8, struct.pack('<Q', n))

            with self.assertRaises(IndexFormatError) as cm:
                load_index(self.path)

            self.assertIn('Truncated', str(cm.exception))

    def test_undersized_header(self):
        """Testing load_index with a header describing less data than the
        file holds
        """
        save_index(_small_index(), self.path)
        self._patch(8, struct.pack('<Q', 299))

        with self.assertRaises(IndexFormatError):
            load_index(self.path)

    def test_point_ids_out_of_range(self):
        """Testing load_index with posting ids outside [0, N)"""
        index = _small_index(policy=RotationPolicy.NEVER)
        ids_offset = (HEADER_OVERHEAD +
                      index.codebooks.centroids_left.nbytes +
                      index.codebooks.centroids_right.nbytes +
                      index.postings.offsets[0].nbytes)

        for bad_id in (index.n, -1):
            save_index(index, self.path)
            self._patch(ids_offset, struct.pack('<i', bad_id))

            with self.assertRaises(IndexFormatError):
                load_index(self.path)

    def test_trailing_bytes(self):
        """Testing load_index with extra bytes at the end"""
        save_index(_small_index(), self.path)

        with open(self.path, 'ab') as fp:
            fp.write(b'\0')

        with self.assertRaises(IndexFormatError):
            load_index(self.path)

    def test_missing(self):
        """Testing load_index with a missing file"""
        with self.assertRaises(OSError):
            load_index(os.path.join(self.tempdir, 'missing.crisp'))
