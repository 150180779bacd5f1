"""Saving and loading index files.

An index file is laid out as follows. All integers are little-endian.

* The magic bytes ``CRSP``, then a u32 format version.
* A header of N (u64), D, padded_d, M, K and flags (u32 each).
* The rotation record: an ``applied`` byte, the CEV (f64), the seed (i64),
  and the ``D x D`` f32 matrix if applied.
* The left, then right, codebook centroids (f32, ``M x K x padded_d/2M``).
* For each subspace, its ``K² + 1`` offsets (i64) then its N ids (i32).
* The packed binary codes (u64, ``N x ceil(padded_d / 64)``).
* The stored data (f32, ``N x padded_d``).
"""

from __future__ import annotations

import logging
import struct
from typing import BinaryIO

import numpy as np

from crisp.datasets.types import DatasetMatrix
from crisp.errors import IndexFormatError, InvalidArgumentError
from crisp.index.binary import code_words
from crisp.index.builder import CrispIndex
from crisp.index.codebooks import SubspaceCodebooks
from crisp.index.postings import CsrPostingIndex
from crisp.preprocessing.rotation import RotationRecord


logger = logging.getLogger(__name__)


#: The magic bytes at the start of every index file.
INDEX_MAGIC = b'CRSP'

#: The current index file format version.
INDEX_VERSION = 1

#: The flag bit set when the stored data was rotated.
FLAG_ROTATED = 0x1

_VERSION_STRUCT = struct.Struct('<4sI')
_HEADER_STRUCT = struct.Struct('<QIIIII')
_ROTATION_STRUCT = struct.Struct('<Bdq')

#: The size of every fixed-width field outside the arrays.
HEADER_OVERHEAD = (_VERSION_STRUCT.size + _HEADER_STRUCT.size +
                   _ROTATION_STRUCT.size)


class _IndexReader:
    """Sequential reader over the bytes of an index file."""

    def __init__(
        self,
        raw: bytes,
        path: str,
    ) -> None:
        self.raw = raw
        self.path = path
        self.pos = 0

    def read_struct(
        self,
        fmt: struct.Struct,
    ) -> tuple:
        end = self.pos + fmt.size

        if end > len(self.raw):
            raise IndexFormatError('Truncated index file', filename=self.path)

        values = fmt.unpack_from(self.raw, self.pos)
        self.pos = end

        return values

    def read_array(
        self,
        dtype: str,
        shape: tuple[int, ...],
    ) -> np.ndarray:
        count = int(np.prod(shape))
        end = self.pos + count * np.dtype(dtype).itemsize

        if end > len(self.raw):
            raise IndexFormatError('Truncated index file', filename=self.path)

        array = np.frombuffer(self.raw, dtype=dtype, count=count,
                              offset=self.pos)
        self.pos = end

        return array.reshape(shape).copy()


def _write_array(
    fp: BinaryIO,
    array: np.ndarray,
    dtype: str,
) -> None:
    fp.write(np.ascontiguousarray(array, dtype=dtype).tobytes())


def save_index(
    index: CrispIndex,
    path: str,
) -> None:
    """Write an index to a file.

    Saving is deterministic: the same index always produces the same bytes.

    Args:
        index (crisp.index.builder.CrispIndex):
            The index to save.

        path (str):
            The destination path.

    Raises:
        OSError:
            The file could not be written.
    """
    rotation = index.rotation
    flags = FLAG_ROTATED if rotation.applied else 0

    with open(path, 'wb') as fp:
        fp.write(_VERSION_STRUCT.pack(INDEX_MAGIC, INDEX_VERSION))
        fp.write(_HEADER_STRUCT.pack(index.n, index.original_d,
                                     index.padded_d, index.m, index.k,
                                     flags))
        fp.write(_ROTATION_STRUCT.pack(int(rotation.applied), rotation.cev,
                                       rotation.seed))

        if rotation.applied:
            assert rotation.matrix is not None
            _write_array(fp, rotation.matrix, '<f4')

        _write_array(fp, index.codebooks.centroids_left, '<f4')
        _write_array(fp, index.codebooks.centroids_right, '<f4')

        for subspace in range(index.m):
            _write_array(fp, index.postings.offsets[subspace], '<i8')
            _write_array(fp, index.postings.ids[subspace], '<i4')

        _write_array(fp, index.binary_codes, '<u8')
        _write_array(fp, index.data.data, '<f4')

    logger.debug('Saved %r to %s', index, path)


def _expected_file_size(
    *,
    n: int,
    d: int,
    padded_d: int,
    m: int,
    k: int,
    rotated: bool,
) -> int:
    half = padded_d // (2 * m)
    size = HEADER_OVERHEAD

    if rotated:
        size += d * d * 4

    size += 2 * m * k * half * 4
    size += m * ((k * k + 1) * 8 + n * 4)
    size += n * code_words(padded_d) * 8
    size += n * padded_d * 4

    return size


def load_index(path: str) -> CrispIndex:
    """Read an index from a file.

    Args:
        path (str):
            The file to read.

    Returns:
        crisp.index.builder.CrispIndex:
        The loaded index.

    Raises:
        OSError:
            The file could not be read.

        crisp.errors.IndexFormatError:
            The file had the wrong magic or version, was truncated, or had
            inconsistent contents.
    """
    with open(path, 'rb') as fp:
        raw = fp.read()

    reader = _IndexReader(raw, path)
    magic, version = reader.read_struct(_VERSION_STRUCT)

    if magic != INDEX_MAGIC:
        raise IndexFormatError('Not an index file (bad magic %r)' % magic,
                               filename=path)

    if version != INDEX_VERSION:
        raise IndexFormatError(
            'Unsupported index version %d (expected %d)'
            % (version, INDEX_VERSION),
            filename=path)

    n, d, padded_d, m, k, flags = reader.read_struct(_HEADER_STRUCT)
    applied, cev, seed = reader.read_struct(_ROTATION_STRUCT)

    if bool(applied) != bool(flags & FLAG_ROTATED):
        raise IndexFormatError('Rotation flag does not match the header',
                               filename=path)

    if m < 1 or k < 1 or padded_d % (2 * m) != 0 or d > padded_d:
        raise IndexFormatError(
            'Invalid index shape (D=%d, padded_d=%d, M=%d, K=%d)'
            % (d, padded_d, m, k),
            filename=path)

    # Check the header's sizes against the file before allocating.
    expected_size = _expected_file_size(n=n, d=d, padded_d=padded_d, m=m,
                                        k=k, rotated=bool(applied))

    if expected_size > len(raw):
        raise IndexFormatError(
            'Truncated index file (header describes %d bytes, found %d)'
            % (expected_size, len(raw)),
            filename=path)
    elif expected_size < len(raw):
        raise IndexFormatError('Unexpected trailing bytes', filename=path)

    if applied:
        matrix = reader.read_array('<f4', (d, d))
    else:
        matrix = None

    half = padded_d // (2 * m)
    num_cells = k * k
    left = reader.read_array('<f4', (m, k, half))
    right = reader.read_array('<f4', (m, k, half))
    offsets = np.empty((m, num_cells + 1), dtype=np.int64)
    ids = np.empty((m, n), dtype=np.int32)

    for subspace in range(m):
        offsets[subspace] = reader.read_array('<i8', (num_cells + 1,))
        ids[subspace] = reader.read_array('<i4', (n,))

    binary_codes = reader.read_array('<u8', (n, code_words(padded_d)))
    data = reader.read_array('<f4', (n, padded_d))

    if reader.pos != len(raw):
        raise IndexFormatError('Unexpected trailing bytes', filename=path)

    try:
        return CrispIndex(
            rotation=RotationRecord(d=d, cev=cev, applied=bool(applied),
                                    seed=seed, matrix=matrix),
            codebooks=SubspaceCodebooks(centroids_left=left,
                                        centroids_right=right),
            postings=CsrPostingIndex(offsets=offsets, ids=ids),
            binary_codes=binary_codes,
            data=DatasetMatrix(data),
            original_d=d)
    except InvalidArgumentError as e:
        raise IndexFormatError('Inconsistent index contents: %s' % e,
                               filename=path)
