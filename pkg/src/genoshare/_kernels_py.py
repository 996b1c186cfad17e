"""NumPy fallback for the noise-generation kernels.

Bit-exact contract with the compiled twin in ``_kernels.pyx``: both derive
every random bit from the same counter scheme, so outputs are identical
whichever backend is active and however rows are chunked across workers.

Counter scheme (splitmix64 finalizer ``mix``):

    h0    = mix(seed ^ SALT)
    key   = mix(mix(h0 ^ row) ^ tile)        # tile = 64 adjacent bit columns
    out_k = mix(key + (k+1) * GOLDEN)        # k-th substream value
    u_k   = (out_k >> 11) * 2**-53           # uniform in [0, 1)

Independent mode consumes one substream value per bit (k = position in
tile); the correlated mode consumes two (k = 2*pos for the fresh draw,
2*pos + 1 for the copy decision).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
SALT = np.uint64(0x8BADF00D5EEDC0DE)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * _M1
    z = z ^ (z >> np.uint64(27))
    z = z * _M2
    return z ^ (z >> np.uint64(31))


def _tile_keys(seed: int, row0: int, n_rows: int, n_tiles: int) -> np.ndarray:
    rows = np.arange(row0, row0 + n_rows, dtype=np.uint64)
    tiles = np.arange(n_tiles, dtype=np.uint64)
    h0 = _mix(np.uint64(seed) ^ SALT)
    hr = _mix(h0 ^ rows)
    return _mix(hr[:, np.newaxis] ^ tiles[np.newaxis, :])


def _mask_padding(words: np.ndarray, bit_cols: int) -> np.ndarray:
    tail = bit_cols - (words.shape[1] - 1) * 64
    if 0 < tail < 64:
        words[:, -1] &= np.uint64((1 << tail) - 1)
    return words


def fill_independent(seed: int, row0: int, n_rows: int, bit_cols: int,
                     p: float) -> np.ndarray:
    """Packed Bernoulli(p) bits for rows [row0, row0 + n_rows)."""
    n_tiles = (bit_cols + 63) // 64
    with np.errstate(over="ignore"):
        keys = _tile_keys(seed, row0, n_rows, n_tiles)
        words = np.zeros((n_rows, n_tiles), dtype=np.uint64)
        for i in range(64):
            out = _mix(keys + np.uint64(i + 1) * GOLDEN)
            u = (out >> np.uint64(11)).astype(np.float64) * _U53
            words |= (u < p).astype(np.uint64) << np.uint64(i)
    return _mask_padding(words, bit_cols)


def fill_markov(seed: int, row0: int, n_rows: int, bit_cols: int, p: float,
                copy_probs: np.ndarray) -> np.ndarray:
    """Packed correlated bits: bit j copies bit j-1 with probability
    ``copy_probs[j]``, otherwise it is a fresh Bernoulli(p) draw.

    ``copy_probs[0]`` is ignored (the first bit is always fresh).
    """
    n_tiles = (bit_cols + 63) // 64
    padded = n_tiles * 64
    copy = np.full(padded, -1.0)  # u < -1 never holds -> padding never copies
    copy[1:bit_cols] = copy_probs[1:bit_cols]
    copy[0] = -1.0

    with np.errstate(over="ignore"):
        keys = _tile_keys(seed, row0, n_rows, n_tiles)
        fresh = np.empty((n_rows, padded), dtype=bool)
        stay = np.empty((n_rows, padded), dtype=bool)
        for i in range(64):
            out_d = _mix(keys + np.uint64(2 * i + 1) * GOLDEN)
            out_s = _mix(keys + np.uint64(2 * i + 2) * GOLDEN)
            u_d = (out_d >> np.uint64(11)).astype(np.float64) * _U53
            u_s = (out_s >> np.uint64(11)).astype(np.float64) * _U53
            fresh[:, i::64] = u_d < p
            stay[:, i::64] = u_s < copy[i::64]

    # bit j equals the fresh draw at the most recent non-copy position:
    # a vectorized form of the sequential copy chain.
    positions = np.arange(padded, dtype=np.int32)
    last_fresh = np.maximum.accumulate(
        np.where(stay, np.int32(0), positions[np.newaxis, :]), axis=1)
    bits = np.take_along_axis(fresh, last_fresh, axis=1)

    packed = np.packbits(bits, axis=1, bitorder="little")
    words = packed.view(np.uint64).reshape(n_rows, n_tiles).copy()
    return _mask_padding(words, bit_cols)
