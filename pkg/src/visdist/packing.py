"""Low-level bit packing for ternary values and presence bitsets.

Ternary packing uses 2 bits per feature, four features per byte, feature
``f`` living in byte ``f // 4`` at bit offset ``2 * (f % 4)`` (low bits
first).  Codes: 0b00 -> 0, 0b01 -> +1, 0b10 -> -1.  0b10+0b01 = 0b11 is
reserved and treated as corruption, which gives file readers a cheap
integrity check.

Presence bitsets use one bit per feature in uint64 words, feature ``f``
in word ``f // 64`` at bit ``f % 64``.  Padding bits beyond the feature
count are always zero, so popcounts over whole words are exact.
"""

from __future__ import annotations

import numpy as np

from .errors import CorruptTernaryCode

TERNARY_BYTES_PER_ROW = lambda n_features: (n_features + 3) // 4  # noqa: E731

# code -> value; index 3 is the reserved pattern
_DECODE = np.array([0, 1, -1, 127], dtype=np.int8)
# value+1 -> code (-1 -> 2, 0 -> 0, +1 -> 1)
_ENCODE = np.array([2, 0, 1], dtype=np.uint8)

_SHIFTS = np.array([0, 2, 4, 6], dtype=np.uint8)


def pack_ternary(values: np.ndarray) -> np.ndarray:
    """Pack a 2-D int array of {-1, 0, 1} into 2-bit codes, 4 per byte.

    Rows are padded with zero codes up to a byte boundary.
    """
    values = np.ascontiguousarray(values, dtype=np.int8)
    if values.ndim != 2:
        raise ValueError("expected a 2-D array of ternary values")
    n_rows, n_features = values.shape
    n_bytes = TERNARY_BYTES_PER_ROW(n_features)
    codes = _ENCODE[values + 1]
    pad = n_bytes * 4 - n_features
    if pad:
        codes = np.concatenate(
            [codes, np.zeros((n_rows, pad), dtype=np.uint8)], axis=1
        )
    codes = codes.reshape(n_rows, n_bytes, 4)
    packed = (codes << _SHIFTS).sum(axis=2, dtype=np.uint16).astype(np.uint8)
    return packed


def unpack_ternary(packed: np.ndarray, n_features: int) -> np.ndarray:
    """Inverse of :func:`pack_ternary`; raises on the reserved 0b11 code."""
    packed = np.ascontiguousarray(packed, dtype=np.uint8)
    if packed.ndim != 2:
        raise ValueError("expected a 2-D array of packed bytes")
    n_rows = packed.shape[0]
    codes = np.empty((n_rows, packed.shape[1] * 4), dtype=np.uint8)
    for k in range(4):
        codes[:, k::4] = (packed >> (2 * k)) & 0b11
    codes = codes[:, :n_features]
    if np.any(codes == 3):
        row, col = np.argwhere(codes == 3)[0]
        raise CorruptTernaryCode(
            f"reserved ternary code 0b11 at row {row}, feature {col}"
        )
    return _DECODE[codes]


def presence_words(values: np.ndarray) -> np.ndarray:
    """Bit-pack the +1 mask of a 2-D ternary value array into uint64 words."""
    values = np.atleast_2d(values)
    mask = (values == 1).astype(np.uint8)
    packed = np.packbits(mask, axis=1, bitorder="little")
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.concatenate(
            [packed, np.zeros((packed.shape[0], pad), dtype=np.uint8)], axis=1
        )
    return packed.view(np.uint64)


def words_per_bitset(n_features: int) -> int:
    return (n_features + 63) // 64


def popcount(words: np.ndarray) -> int:
    """Number of set bits across an array of uint64 words."""
    return int(np.bitwise_count(words).sum(dtype=np.int64))
