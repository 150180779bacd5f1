"""Sign-based binary codes and Hamming distances."""

from __future__ import annotations

import numpy as np


#: The number of bits in each packed word.
WORD_BITS = 64


def code_words(d: int) -> int:
    """Return the number of 64-bit words in the code of a ``d``-vector.

    Args:
        d (int):
            The dimensionality.

    Returns:
        int:
        ``ceil(d / 64)``.
    """
    return -(-d // WORD_BITS)


def binarize_rows(data: np.ndarray) -> np.ndarray:
    """Pack the signs of every row into 64-bit words.

    Bit ``i`` of a row's code is set iff ``row[i] > 0``. Bits are packed
    little-endian: dimension ``i`` lands in word ``i // 64`` at bit
    ``i % 64``.

    Args:
        data (numpy.ndarray):
            The ``(n, d)`` rows.

    Returns:
        numpy.ndarray:
        The ``(n, ceil(d / 64))`` uint64 codes.
    """
    data = np.atleast_2d(np.asarray(data))
    n, d = data.shape
    words = code_words(d)
    bits = np.zeros((n, words * WORD_BITS), dtype=bool)
    np.greater(data, 0, out=bits[:, :d])
    packed = np.packbits(bits, axis=1, bitorder='little')

    return np.ascontiguousarray(packed).view('<u8').reshape(n, words)


def binarize(x: np.ndarray) -> np.ndarray:
    """Pack the signs of one vector into 64-bit words.

    Args:
        x (numpy.ndarray):
            The ``(d,)`` vector.

    Returns:
        numpy.ndarray:
        The ``(ceil(d / 64),)`` uint64 code.
    """
    return binarize_rows(np.asarray(x).reshape(1, -1))[0]


def hamming_distances(
    q_code: np.ndarray,
    codes: np.ndarray,
) -> np.ndarray:
    """Return the Hamming distance from a code to each of many codes.

    Args:
        q_code (numpy.ndarray):
            The ``(words,)`` query code.

        codes (numpy.ndarray):
            The ``(n, words)`` codes.

    Returns:
        numpy.ndarray:
        The ``(n,)`` int64 distances.
    """
    return (np.bitwise_count(np.bitwise_xor(codes, q_code))
            .sum(axis=1, dtype=np.int64))
