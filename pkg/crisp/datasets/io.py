"""Reading and writing fvecs/ivecs files.

Both formats are a sequence of records. Each record is a little-endian
int32 dimension, followed by that many little-endian float32 (fvecs) or
int32 (ivecs) values. All records in a file share the same dimension.
"""

from __future__ import annotations

import logging

import numpy as np

from crisp.datasets.types import DatasetMatrix, GroundTruth
from crisp.errors import DatasetFormatError, InvalidArgumentError


logger = logging.getLogger(__name__)


def _read_records(
    path: str,
    value_dtype: str,
) -> np.ndarray:
    """Read a vecs file into an ``(n, d)`` array.

    Args:
        path (str):
            The file to read.

        value_dtype (str):
            The little-endian NumPy dtype of the values (``<f4`` or ``<i4``).

    Returns:
        numpy.ndarray:
        The ``(n, d)`` array of values. An empty file results in a
        ``(0, 0)`` array.

    Raises:
        OSError:
            The file could not be read.

        crisp.errors.DatasetFormatError:
            The file had mixed dimensions or was truncated.
    """
    with open(path, 'rb') as fp:
        raw = fp.read()

    if not raw:
        return np.zeros((0, 0), dtype=value_dtype)

    if len(raw) < 4:
        raise DatasetFormatError('Truncated record header',
                                 filename=path, record=0)

    dim = int(np.frombuffer(raw, dtype='<i4', count=1)[0])

    if dim < 0:
        raise DatasetFormatError('Negative vector dimension %d' % dim,
                                 filename=path, record=0)

    rec_size = 4 * (dim + 1)

    if len(raw) % rec_size == 0:
        words = np.frombuffer(raw, dtype='<i4').reshape(-1, dim + 1)
        bad = np.flatnonzero(words[:, 0] != dim)

        if bad.size:
            raise DatasetFormatError(
                'Vector dimension %d does not match %d'
                % (words[bad[0], 0], dim),
                filename=path, record=int(bad[0]))

        return (
            np.frombuffer(raw, dtype=value_dtype)
            .reshape(-1, dim + 1)[:, 1:]
            .copy()
        )

    # The sizes don't line up. Walk the records to report where things went
    # wrong.
    _raise_record_error(path, raw, dim)


def _raise_record_error(
    path: str,
    raw: bytes,
    dim: int,
) -> None:
    """Locate and raise the error in a malformed vecs file.

    Args:
        path (str):
            The file being read.

        raw (bytes):
            The file contents.

        dim (int):
            The dimension of the first record.

    Raises:
        crisp.errors.DatasetFormatError:
            Always raised, describing the first bad record.
    """
    offset = 0
    record = 0
    size = len(raw)

    while offset < size:
        if offset + 4 > size:
            raise DatasetFormatError('Truncated record header',
                                     filename=path, record=record)

        rec_dim = int(np.frombuffer(raw, dtype='<i4', count=1,
                                    offset=offset)[0])

        if rec_dim != dim:
            raise DatasetFormatError(
                'Vector dimension %d does not match %d' % (rec_dim, dim),
                filename=path, record=record)

        offset += 4 * (dim + 1)

        if offset > size:
            raise DatasetFormatError('Truncated record',
                                     filename=path, record=record)

        record += 1

    raise DatasetFormatError('Malformed vecs file', filename=path)


def _write_records(
    path: str,
    values: np.ndarray,
    value_dtype: str,
) -> None:
    """Write an ``(n, d)`` array as a vecs file.

    Args:
        path (str):
            The file to write.

        values (numpy.ndarray):
            The values to write.

        value_dtype (str):
            The little-endian NumPy dtype of the values.

    Raises:
        OSError:
            The file could not be written.
    """
    n = values.shape[0]
    d = values.shape[1] if values.ndim == 2 else 0

    records = np.empty((n, d + 1), dtype='<i4')
    records[:, 0] = d
    records[:, 1:] = np.ascontiguousarray(values, dtype=value_dtype).view(
        '<i4')

    with open(path, 'wb') as fp:
        fp.write(records.tobytes())


def load_fvecs(path: str) -> DatasetMatrix:
    """Load a dataset from an fvecs file.

    Args:
        path (str):
            The file to load.

    Returns:
        crisp.datasets.types.DatasetMatrix:
        The loaded dataset.

    Raises:
        OSError:
            The file could not be read.

        crisp.errors.DatasetFormatError:
            The file had mixed dimensions or was truncated, or held
            non-finite values.
    """
    values = _read_records(path, '<f4')

    try:
        dataset = DatasetMatrix(values.astype(np.float32, copy=False))
    except InvalidArgumentError as e:
        raise DatasetFormatError(str(e), filename=path)

    logger.debug('Loaded %d x %d vectors from %s',
                 values.shape[0], values.shape[1], path)

    return dataset


def save_fvecs(
    dataset: DatasetMatrix,
    path: str,
) -> None:
    """Save a dataset to an fvecs file.

    Args:
        dataset (crisp.datasets.types.DatasetMatrix):
            The dataset to save.

        path (str):
            The file to write.

    Raises:
        OSError:
            The file could not be written.
    """
    _write_records(path, dataset.data, '<f4')


def load_ivecs(path: str) -> GroundTruth:
    """Load ground truth from an ivecs file.

    Args:
        path (str):
            The file to load.

    Returns:
        crisp.datasets.types.GroundTruth:
        The loaded ground truth.

    Raises:
        OSError:
            The file could not be read.

        crisp.errors.DatasetFormatError:
            The file had mixed row lengths or was truncated.
    """
    return GroundTruth(_read_records(path, '<i4').astype(np.int32))


def save_ivecs(
    gt: GroundTruth,
    path: str,
) -> None:
    """Save ground truth to an ivecs file.

    Only the IDs are written. The format has no room for distances.

    Args:
        gt (crisp.datasets.types.GroundTruth):
            The ground truth to save.

        path (str):
            The file to write.

    Raises:
        OSError:
            The file could not be written.
    """
    _write_records(path, gt.ids, '<i4')
