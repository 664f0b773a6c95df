"""Pure-Python arithmetic coder (reference implementation).

32-bit low/high state with underflow counting, bit-oriented output packed
into bytes MSB-first. The compiled backend in ``_range_cy`` implements the
same state machine and must produce byte-identical streams; the test suite
cross-checks the two.

Payload framing: 4 bytes CRC32 (little-endian) over the coded symbol
indices (as int32 LE), then the arithmetic-coded bits. The CRC is what
turns truncation or corruption into a detectable error instead of silent
garbage, since an arithmetic decoder happily decodes any byte stream.
"""

from __future__ import annotations

import struct
import zlib
from array import array

import numpy as np

from ...errors import CorruptStreamError

__all__ = ["RangeEncoder", "RangeDecoder", "BACKEND"]

BACKEND = "python"

_STATE_BITS = 32
_FULL = 1 << _STATE_BITS
_HALF = _FULL >> 1
_QUARTER = _HALF >> 1
_MASK = _FULL - 1


def _crc(indices: array) -> int:
    return zlib.crc32(np.asarray(indices, dtype=np.int64)
                      .astype("<i4").tobytes()) & 0xFFFFFFFF


class RangeEncoder:
    """Streaming encoder; one instance per payload, never shared."""

    def __init__(self):
        self._low = 0
        self._high = _MASK
        self._underflow = 0
        self._bitbuf = 0
        self._nbits = 0
        self._bytes = bytearray()
        self._indices = array("q")
        self._finished = False

    def _put_bit(self, bit: int) -> None:
        self._bitbuf = (self._bitbuf << 1) | bit
        self._nbits += 1
        if self._nbits == 8:
            self._bytes.append(self._bitbuf)
            self._bitbuf = 0
            self._nbits = 0

    def _shift(self) -> None:
        bit = self._low >> (_STATE_BITS - 1)
        self._put_bit(bit)
        inv = bit ^ 1
        while self._underflow:
            self._put_bit(inv)
            self._underflow -= 1

    def encode(self, index: int, cum) -> None:
        """Code one symbol ``index`` with cumulative table ``cum``.

        ``cum`` has K+1 entries, ``cum[0] == 0``, ``cum[-1] == total``;
        the symbol's frequency ``cum[index+1] - cum[index]`` must be > 0.
        """
        if self._finished:
            raise RuntimeError("encoder already finished")
        if hasattr(cum, "tolist"):
            cum = cum.tolist()
        low = self._low
        high = self._high
        span = high - low + 1
        total = cum[-1]
        sym_lo = cum[index]
        sym_hi = cum[index + 1]
        high = low + sym_hi * span // total - 1
        low = low + sym_lo * span // total

        while ((low ^ high) & _HALF) == 0:
            self._low = low
            self._shift()
            low = (low << 1) & _MASK
            high = ((high << 1) & _MASK) | 1
        while (low & ~high & _QUARTER) != 0:
            self._underflow += 1
            low = (low << 1) ^ _HALF
            high = ((high ^ _HALF) << 1) | _HALF | 1
        self._low = low
        self._high = high
        self._indices.append(index)

    def encode_all(self, indices, cum_matrix) -> None:
        """Code a batch; row ``i`` of ``cum_matrix`` models symbol ``i``."""
        rows = np.asarray(cum_matrix).tolist()
        idx = np.asarray(indices, dtype=np.int64).tolist()
        if len(idx) != len(rows):
            raise ValueError("one cumulative table required per symbol")
        for i, row in zip(idx, rows):
            self.encode(i, row)

    def finish(self) -> bytes:
        """Flush the coder and return the framed payload."""
        if self._finished:
            raise RuntimeError("encoder already finished")
        self._finished = True
        self._put_bit(1)
        while self._nbits:
            self._put_bit(0)
        return struct.pack("<I", _crc(self._indices)) + bytes(self._bytes)


class RangeDecoder:
    """Streaming decoder over one framed payload."""

    def __init__(self, data: bytes):
        if len(data) < 4:
            raise CorruptStreamError(
                f"payload of {len(data)} bytes is shorter than its framing")
        (self._crc_expect,) = struct.unpack_from("<I", data)
        self._data = data
        self._pos = 4
        self._bitbuf = 0
        self._nbits = 0
        self._low = 0
        self._high = _MASK
        self._indices = array("q")
        code = 0
        for _ in range(_STATE_BITS):
            code = (code << 1) | self._get_bit()
        self._code = code

    def _get_bit(self) -> int:
        if self._nbits == 0:
            if self._pos < len(self._data):
                self._bitbuf = self._data[self._pos]
                self._pos += 1
            else:
                self._bitbuf = 0  # conceptual trailing zeros
            self._nbits = 8
        self._nbits -= 1
        return (self._bitbuf >> self._nbits) & 1

    def decode(self, cum) -> int:
        """Decode one symbol index under cumulative table ``cum``."""
        if hasattr(cum, "tolist"):
            cum = cum.tolist()
        low = self._low
        high = self._high
        code = self._code
        span = high - low + 1
        total = cum[-1]
        value = ((code - low + 1) * total - 1) // span

        # Largest s with cum[s] <= value.
        lo, hi = 0, len(cum) - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cum[mid] > value:
                hi = mid
            else:
                lo = mid
        index = lo

        sym_lo = cum[index]
        sym_hi = cum[index + 1]
        high = low + sym_hi * span // total - 1
        low = low + sym_lo * span // total

        while ((low ^ high) & _HALF) == 0:
            code = ((code << 1) & _MASK) | self._get_bit()
            low = (low << 1) & _MASK
            high = ((high << 1) & _MASK) | 1
        while (low & ~high & _QUARTER) != 0:
            code = (code & _HALF) | ((code << 1) & (_MASK >> 1)) \
                | self._get_bit()
            low = (low << 1) ^ _HALF
            high = ((high ^ _HALF) << 1) | _HALF | 1

        self._low = low
        self._high = high
        self._code = code
        self._indices.append(index)
        return index

    def decode_all(self, cum_matrix) -> np.ndarray:
        rows = np.asarray(cum_matrix).tolist()
        return np.array([self.decode(row) for row in rows], dtype=np.int64)

    def verify(self) -> None:
        """Check the decoded symbols against the payload CRC."""
        if _crc(self._indices) != self._crc_expect:
            raise CorruptStreamError(
                "payload checksum mismatch: stream truncated or corrupt")
