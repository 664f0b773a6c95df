"""Chunked container format for coded sequences (``.nvc`` files).

Byte layout (all integers little-endian):

    header:
        magic        4 bytes  b"NVC1"
        version      u8       currently 1
        width        u32      original frame width (pre-padding)
        height       u32      original frame height
        gop_size     u16      >= 1; 1 means intra-only
        model_id     u16      lambda-ladder index of the coding model
        frame_count  u32
        header_crc   u32      CRC32 of the 19 preceding bytes
    frame record (frame_count times):
        frame_type   u8       0 = I, 1 = P
        chunk_count  u8
        chunk (chunk_count times):
            kind     u8       see CHUNK_KINDS
            sym_min  i32      symbol range coded in the payload
            sym_max  i32
            length   u32      payload byte count
            payload  `length` bytes (CRC-framed range-coder output)

Chunks appear in canonical order: hyper before main for every sub-codec
(main-latent tables depend on the decoded hyper latent) and motion before
residual. The first frame of every GOP is an I-frame.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

from .errors import (BadMagicError, ChunkOrderError, HeaderCorruptError,
                     TruncatedStreamError, UnsupportedVersionError)

__all__ = [
    "MAGIC", "VERSION", "CHUNK_KINDS", "I_FRAME_KINDS", "P_FRAME_KINDS",
    "Chunk", "FrameRecord", "StreamHeader", "NvcBitstream",
    "write_stream", "read_stream",
]

MAGIC = b"NVC1"
VERSION = 1

CHUNK_KINDS = {
    "intra_hyper": 0,
    "intra_main": 1,
    "motion_hyper": 2,
    "motion_main": 3,
    "res_hyper": 4,
    "res_main": 5,
}
_KIND_NAMES = {v: k for k, v in CHUNK_KINDS.items()}

I_FRAME_KINDS = ("intra_hyper", "intra_main")
P_FRAME_KINDS = ("motion_hyper", "motion_main", "res_hyper", "res_main")

_HEADER_FMT = "<4sBIIHHI"
_HEADER_LEN = struct.calcsize(_HEADER_FMT)  # 19 bytes before the CRC


@dataclass
class Chunk:
    kind: str
    sym_min: int
    sym_max: int
    payload: bytes

    def __post_init__(self):
        if self.kind not in CHUNK_KINDS:
            raise ValueError(f"unknown chunk kind {self.kind!r}")
        if self.sym_max < self.sym_min:
            raise ValueError("chunk symbol range is empty")


@dataclass
class FrameRecord:
    frame_type: str  # "I" or "P"
    chunks: list[Chunk]

    def expected_kinds(self) -> tuple[str, ...]:
        return I_FRAME_KINDS if self.frame_type == "I" else P_FRAME_KINDS


@dataclass
class StreamHeader:
    width: int
    height: int
    gop_size: int
    model_id: int = 0
    frame_count: int = 0
    version: int = VERSION

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if self.gop_size < 1:
            raise ValueError("gop_size must be >= 1")


@dataclass
class NvcBitstream:
    header: StreamHeader
    frames: list[FrameRecord] = field(default_factory=list)

    def total_bytes(self) -> int:
        return _HEADER_LEN + 4 + sum(
            2 + sum(13 + len(c.payload) for c in f.chunks)
            for f in self.frames)

    def bits_per_pixel(self) -> float:
        n = max(self.header.frame_count, 1)
        return 8.0 * self.total_bytes() / (
            self.header.width * self.header.height * n)


def _check_frame(index: int, gop_size: int, record: FrameRecord) -> None:
    want_intra = index % gop_size == 0
    if want_intra != (record.frame_type == "I"):
        raise ChunkOrderError(
            f"frame {index}: expected {'I' if want_intra else 'P'} frame, "
            f"found {record.frame_type}")
    kinds = tuple(c.kind for c in record.chunks)
    if kinds != record.expected_kinds():
        raise ChunkOrderError(
            f"frame {index}: chunk kinds {kinds} violate canonical order "
            f"{record.expected_kinds()}")


def write_stream(header: StreamHeader, frames: list[FrameRecord]) -> bytes:
    """Serialize frame records under ``header``; validates structure."""
    if header.frame_count != len(frames):
        raise ValueError(
            f"header frame_count {header.frame_count} != {len(frames)} records")
    out = bytearray()
    fields = struct.pack(_HEADER_FMT, MAGIC, header.version, header.width,
                         header.height, header.gop_size, header.model_id,
                         header.frame_count)
    out += fields
    out += struct.pack("<I", zlib.crc32(fields) & 0xFFFFFFFF)
    for i, rec in enumerate(frames):
        _check_frame(i, header.gop_size, rec)
        out += struct.pack("<BB", 0 if rec.frame_type == "I" else 1,
                           len(rec.chunks))
        for c in rec.chunks:
            out += struct.pack("<BiiI", CHUNK_KINDS[c.kind], c.sym_min,
                               c.sym_max, len(c.payload))
            out += c.payload
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedStreamError(
                f"stream ended inside {what} "
                f"(needed {n} bytes at offset {self.pos})")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_stream(data: bytes) -> NvcBitstream:
    """Parse and validate a container; inverse of :func:`write_stream`."""
    r = _Reader(data)
    fields = r.take(_HEADER_LEN, "header")
    if fields[:4] != MAGIC:
        raise BadMagicError(f"not an NVC stream (magic {fields[:4]!r})")
    (crc,) = r.unpack("<I", "header checksum")
    if crc != zlib.crc32(fields) & 0xFFFFFFFF:
        raise HeaderCorruptError("header checksum mismatch")
    magic, version, width, height, gop_size, model_id, frame_count = \
        struct.unpack(_HEADER_FMT, fields)
    if version != VERSION:
        raise UnsupportedVersionError(f"container version {version}")
    header = StreamHeader(width=width, height=height, gop_size=gop_size,
                          model_id=model_id, frame_count=frame_count,
                          version=version)

    frames = []
    for i in range(frame_count):
        ftype, n_chunks = r.unpack("<BB", f"frame {i} record")
        if ftype not in (0, 1):
            raise ChunkOrderError(f"frame {i}: unknown frame type {ftype}")
        chunks = []
        for j in range(n_chunks):
            kind_id, sym_min, sym_max, length = r.unpack(
                "<BiiI", f"frame {i} chunk {j} header")
            if kind_id not in _KIND_NAMES:
                raise ChunkOrderError(
                    f"frame {i} chunk {j}: unknown kind {kind_id}")
            payload = r.take(length, f"frame {i} chunk {j} payload")
            chunks.append(Chunk(_KIND_NAMES[kind_id], sym_min, sym_max,
                                payload))
        rec = FrameRecord("I" if ftype == 0 else "P", chunks)
        _check_frame(i, gop_size, rec)
        frames.append(rec)
    if r.pos != len(data):
        raise ChunkOrderError(
            f"{len(data) - r.pos} trailing bytes after last frame")
    return NvcBitstream(header, frames)
