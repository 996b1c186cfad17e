# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled noise-generation kernels.

Bit-exact twin of ``_kernels_py``: same counter scheme, same uniform
mapping, same comparisons.  See that module for the scheme description.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t SALT = 0x8BADF00D5EEDC0DEULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double U53 = 2.0 ** -53


cdef inline uint64_t mix(uint64_t z) noexcept nogil:
    z ^= z >> 30
    z *= M1
    z ^= z >> 27
    z *= M2
    return z ^ (z >> 31)


cdef inline double uniform(uint64_t key, uint64_t k) noexcept nogil:
    return <double>(mix(key + (k + 1) * GOLDEN) >> 11) * U53


def fill_independent(uint64_t seed, int64_t row0, int64_t n_rows,
                     int64_t bit_cols, double p):
    """Packed Bernoulli(p) bits for rows [row0, row0 + n_rows)."""
    cdef int64_t n_tiles = (bit_cols + 63) // 64
    out = np.zeros((n_rows, n_tiles), dtype=np.uint64)
    cdef uint64_t[:, ::1] words = out
    cdef uint64_t h0 = mix(seed ^ SALT)
    cdef uint64_t hr, key, word
    cdef int64_t r, t, i, j
    with nogil:
        for r in range(n_rows):
            hr = mix(h0 ^ <uint64_t>(row0 + r))
            for t in range(n_tiles):
                key = mix(hr ^ <uint64_t>t)
                word = 0
                for i in range(64):
                    j = t * 64 + i
                    if j >= bit_cols:
                        break
                    if uniform(key, <uint64_t>i) < p:
                        word |= <uint64_t>1 << i
                words[r, t] = word
    return out


def fill_markov(uint64_t seed, int64_t row0, int64_t n_rows, int64_t bit_cols,
                double p, double[::1] copy_probs):
    """Packed correlated bits: bit j copies bit j-1 with probability
    ``copy_probs[j]``, otherwise it is a fresh Bernoulli(p) draw."""
    cdef int64_t n_tiles = (bit_cols + 63) // 64
    out = np.zeros((n_rows, n_tiles), dtype=np.uint64)
    cdef uint64_t[:, ::1] words = out
    cdef uint64_t h0 = mix(seed ^ SALT)
    cdef uint64_t hr, key, word
    cdef int64_t r, t, i, j
    cdef bint bit = 0, prev = 0
    with nogil:
        for r in range(n_rows):
            hr = mix(h0 ^ <uint64_t>(row0 + r))
            prev = 0
            for t in range(n_tiles):
                key = mix(hr ^ <uint64_t>t)
                word = 0
                for i in range(64):
                    j = t * 64 + i
                    if j >= bit_cols:
                        break
                    if j > 0 and uniform(key, <uint64_t>(2 * i + 1)) < copy_probs[j]:
                        bit = prev
                    else:
                        bit = uniform(key, <uint64_t>(2 * i)) < p
                    if bit:
                        word |= <uint64_t>1 << i
                    prev = bit
                words[r, t] = word
    return out
