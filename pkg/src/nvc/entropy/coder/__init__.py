"""Range coder with a compiled fast path.

Imports the Cython backend when it has been built, otherwise falls back
to the pure-Python implementation. Set ``NVC_PURE_PYTHON=1`` to force the
fallback (used by the benchmark and the backend-parity tests). Both
backends emit byte-identical streams.
"""

import os

from . import _range_py

if os.environ.get("NVC_PURE_PYTHON") == "1":
    _impl = _range_py
else:
    try:
        from . import _range_cy as _impl
    except ImportError:
        _impl = _range_py

RangeEncoder = _impl.RangeEncoder
RangeDecoder = _impl.RangeDecoder
BACKEND = _impl.BACKEND

__all__ = ["RangeEncoder", "RangeDecoder", "BACKEND",
           "range_encode", "range_decode"]


def range_encode(symbols, cum_matrix) -> bytes:
    """Encode a symbol-index sequence, one cumulative table per symbol."""
    enc = RangeEncoder()
    enc.encode_all(symbols, cum_matrix)
    return enc.finish()


def range_decode(data: bytes, cum_matrix):
    """Decode ``len(cum_matrix)`` symbol indices and verify integrity."""
    dec = RangeDecoder(data)
    out = dec.decode_all(cum_matrix)
    dec.verify()
    return out
