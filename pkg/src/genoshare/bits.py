"""Bit-packed binary matrices.

A matrix of n rows and B bit columns is stored as an (n, ceil(B/64))
array of uint64 words, little-endian within each word: bit column j of
row r lives at ``words[r, j >> 6] >> (j & 63) & 1``.  Padding bits past
column B-1 are always zero; every helper here preserves that invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError

WORD_BITS = 64


def words_per_row(bit_columns: int) -> int:
    return (bit_columns + WORD_BITS - 1) // WORD_BITS


def pack_bool(bits: np.ndarray) -> np.ndarray:
    """Pack an (n, B) boolean array into (n, ceil(B/64)) uint64 words."""
    n, b = bits.shape
    w = words_per_row(b)
    padded = np.zeros((n, w * WORD_BITS), dtype=np.uint8)
    padded[:, :b] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view(np.uint64).reshape(n, w)

def unpack_words(words: np.ndarray, bit_columns: int) -> np.ndarray:
    """Unpack uint64 words back into an (n, bit_columns) boolean array."""
    n = words.shape[0]
    as_bytes = np.ascontiguousarray(words).view(np.uint8).reshape(n, -1)
    bits = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return bits[:, :bit_columns].astype(bool)


def zero_padding(words: np.ndarray, bit_columns: int) -> np.ndarray:
    """Force padding bits past `bit_columns` to zero (in place), return words."""
    w = words.shape[1]
    tail = bit_columns - (w - 1) * WORD_BITS
    if 0 < tail < WORD_BITS:
        words[:, -1] &= np.uint64((1 << tail) - 1)
    return words


@dataclass(frozen=True)
class BinaryMatrix:
    """Bit-packed n x (2m) encoding of a genotype dataset.

    Bit columns 2j and 2j+1 belong to the SNP ``column_map[j]``; sample ids
    ride along so decoding restores a full dataset.
    """

    words: np.ndarray
    bit_columns: int
    column_map: tuple[str, ...]
    sample_ids: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.bit_columns % 2 != 0:
            raise ShapeMismatchError(f"bit_columns must be even, got {self.bit_columns}")
        if 2 * len(self.column_map) != self.bit_columns:
            raise ShapeMismatchError(
                f"column_map has {len(self.column_map)} rsids for {self.bit_columns} bit columns"
            )
        if self.words.shape != (self.rows, words_per_row(self.bit_columns)):
            raise ShapeMismatchError(
                f"words shape {self.words.shape} does not match "
                f"{self.rows} rows x {self.bit_columns} bit columns"
            )
        self.words.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.words.shape[0]

    @classmethod
    def from_bool(cls, bits: np.ndarray, column_map, sample_ids) -> "BinaryMatrix":
        return cls(pack_bool(np.asarray(bits, dtype=bool)), bits.shape[1],
                   tuple(column_map), tuple(sample_ids))

    def to_bool(self) -> np.ndarray:
        return unpack_words(self.words, self.bit_columns)

    def same_shape(self, other) -> bool:
        return (self.rows, self.bit_columns) == (other.rows, other.bit_columns)

    def __eq__(self, other):
        if not isinstance(other, BinaryMatrix):
            return NotImplemented
        return (self.bit_columns == other.bit_columns
                and self.column_map == other.column_map
                and self.sample_ids == other.sample_ids
                and np.array_equal(self.words, other.words))
