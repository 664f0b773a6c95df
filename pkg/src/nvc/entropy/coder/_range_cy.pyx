# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled arithmetic coder.

Same state machine as ``_range_py`` (32-bit low/high, underflow counting,
MSB-first bit packing, CRC-framed payload); the two backends are required
to produce byte-identical streams. All state arithmetic fits in unsigned
64-bit: low/high < 2^32 and freq totals are <= 2^16, so the widest
intermediate is below 2^48.
"""

import struct
import zlib
from array import array

import numpy as np

from libc.stdint cimport uint8_t, uint32_t, uint64_t, int64_t

from ...errors import CorruptStreamError

BACKEND = "cython"

cdef uint64_t STATE_BITS = 32
cdef uint64_t FULL = (<uint64_t>1) << 32
cdef uint64_t HALF = FULL >> 1
cdef uint64_t QUARTER = HALF >> 1
cdef uint64_t MASK = FULL - 1


def _crc(indices):
    return zlib.crc32(np.asarray(indices, dtype=np.int64)
                      .astype("<i4").tobytes()) & 0xFFFFFFFF


cdef inline const uint32_t[::1] _as_cum(object cum):
    if isinstance(cum, np.ndarray):
        return np.ascontiguousarray(cum, dtype=np.uint32)
    return np.ascontiguousarray(np.asarray(cum), dtype=np.uint32)


cdef class RangeEncoder:
    cdef uint64_t low, high, underflow, bitbuf
    cdef int nbits
    cdef bytearray buf
    cdef object indices
    cdef bint finished

    def __cinit__(self):
        self.low = 0
        self.high = MASK
        self.underflow = 0
        self.bitbuf = 0
        self.nbits = 0
        self.buf = bytearray()
        self.indices = array("q")
        self.finished = False

    cdef inline void _put_bit(self, uint64_t bit):
        self.bitbuf = (self.bitbuf << 1) | bit
        self.nbits += 1
        if self.nbits == 8:
            self.buf.append(<uint8_t>self.bitbuf)
            self.bitbuf = 0
            self.nbits = 0

    cdef inline void _shift(self):
        cdef uint64_t bit = self.low >> (STATE_BITS - 1)
        self._put_bit(bit)
        cdef uint64_t inv = bit ^ 1
        while self.underflow:
            self._put_bit(inv)
            self.underflow -= 1

    cdef inline void _encode_one(self, Py_ssize_t index,
                                 const uint32_t[::1] cum) except *:
        cdef uint64_t low = self.low
        cdef uint64_t high = self.high
        cdef uint64_t span = high - low + 1
        cdef uint64_t total = cum[cum.shape[0] - 1]
        cdef uint64_t sym_lo = cum[index]
        cdef uint64_t sym_hi = cum[index + 1]
        high = low + sym_hi * span // total - 1
        low = low + sym_lo * span // total

        while ((low ^ high) & HALF) == 0:
            self.low = low
            self._shift()
            low = (low << 1) & MASK
            high = ((high << 1) & MASK) | 1
        while (low & (~high) & QUARTER) != 0:
            self.underflow += 1
            low = (low << 1) ^ HALF
            high = ((high ^ HALF) << 1) | HALF | 1
        self.low = low
        self.high = high
        self.indices.append(index)

    def encode(self, index, cum):
        if self.finished:
            raise RuntimeError("encoder already finished")
        self._encode_one(index, _as_cum(cum))

    def encode_all(self, indices, cum_matrix):
        if self.finished:
            raise RuntimeError("encoder already finished")
        cdef const int64_t[::1] idx = np.ascontiguousarray(
            np.asarray(indices, dtype=np.int64))
        cdef const uint32_t[:, ::1] cums = np.ascontiguousarray(
            np.asarray(cum_matrix), dtype=np.uint32)
        if idx.shape[0] != cums.shape[0]:
            raise ValueError("one cumulative table required per symbol")
        cdef Py_ssize_t i
        for i in range(idx.shape[0]):
            self._encode_one(idx[i], cums[i])

    def finish(self):
        if self.finished:
            raise RuntimeError("encoder already finished")
        self.finished = True
        self._put_bit(1)
        while self.nbits:
            self._put_bit(0)
        return struct.pack("<I", _crc(self.indices)) + bytes(self.buf)


cdef class RangeDecoder:
    cdef uint64_t low, high, code, bitbuf
    cdef int nbits
    cdef bytes data
    cdef Py_ssize_t pos
    cdef uint32_t crc_expect
    cdef object indices

    def __init__(self, data):
        if len(data) < 4:
            raise CorruptStreamError(
                f"payload of {len(data)} bytes is shorter than its framing")
        self.crc_expect = struct.unpack_from("<I", data)[0]
        self.data = bytes(data)
        self.pos = 4
        self.bitbuf = 0
        self.nbits = 0
        self.low = 0
        self.high = MASK
        self.indices = array("q")
        cdef uint64_t c = 0
        cdef int i
        for i in range(32):
            c = (c << 1) | self._get_bit()
        self.code = c

    cdef inline uint64_t _get_bit(self):
        if self.nbits == 0:
            if self.pos < len(self.data):
                self.bitbuf = <uint8_t>self.data[self.pos]
                self.pos += 1
            else:
                self.bitbuf = 0
            self.nbits = 8
        self.nbits -= 1
        return (self.bitbuf >> self.nbits) & 1

    cdef inline Py_ssize_t _decode_one(self, const uint32_t[::1] cum) except -1:
        cdef uint64_t low = self.low
        cdef uint64_t high = self.high
        cdef uint64_t code = self.code
        cdef uint64_t span = high - low + 1
        cdef uint64_t total = cum[cum.shape[0] - 1]
        cdef uint64_t value = ((code - low + 1) * total - 1) // span

        cdef Py_ssize_t lo = 0
        cdef Py_ssize_t hi = cum.shape[0] - 1
        cdef Py_ssize_t mid
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cum[mid] > value:
                hi = mid
            else:
                lo = mid
        cdef Py_ssize_t index = lo

        cdef uint64_t sym_lo = cum[index]
        cdef uint64_t sym_hi = cum[index + 1]
        high = low + sym_hi * span // total - 1
        low = low + sym_lo * span // total

        while ((low ^ high) & HALF) == 0:
            code = ((code << 1) & MASK) | self._get_bit()
            low = (low << 1) & MASK
            high = ((high << 1) & MASK) | 1
        while (low & (~high) & QUARTER) != 0:
            code = (code & HALF) | ((code << 1) & (MASK >> 1)) | self._get_bit()
            low = (low << 1) ^ HALF
            high = ((high ^ HALF) << 1) | HALF | 1

        self.low = low
        self.high = high
        self.code = code
        self.indices.append(index)
        return index

    def decode(self, cum):
        return self._decode_one(_as_cum(cum))

    def decode_all(self, cum_matrix):
        cdef const uint32_t[:, ::1] cums = np.ascontiguousarray(
            np.asarray(cum_matrix), dtype=np.uint32)
        out = np.empty(cums.shape[0], dtype=np.int64)
        cdef int64_t[::1] view = out
        cdef Py_ssize_t i
        for i in range(cums.shape[0]):
            view[i] = self._decode_one(cums[i])
        return out

    def verify(self):
        if _crc(self.indices) != self.crc_expect:
            raise CorruptStreamError(
                "payload checksum mismatch: stream truncated or corrupt")
