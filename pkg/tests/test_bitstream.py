import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvc.bitstream import (Chunk, FrameRecord, NvcBitstream, StreamHeader,
                           read_stream, write_stream)
from nvc.errors import (BadMagicError, ChunkOrderError, HeaderCorruptError,
                        TruncatedStreamError, UnsupportedVersionError)


def _ichunks(payloads=(b"\x01\x02", b"\x03")):
    return [Chunk("intra_hyper", -2, 2, payloads[0]),
            Chunk("intra_main", -5, 5, payloads[1])]


def _pchunks():
    return [Chunk("motion_hyper", 0, 1, b"a"),
            Chunk("motion_main", -3, 3, b"bb"),
            Chunk("res_hyper", 0, 0, b"c"),
            Chunk("res_main", -1, 1, b"dddd")]


def _stream(n_frames=3, gop_size=10):
    frames = [FrameRecord("I" if i % gop_size == 0 else "P",
                          _ichunks() if i % gop_size == 0 else _pchunks())
              for i in range(n_frames)]
    header = StreamHeader(width=64, height=48, gop_size=gop_size,
                          model_id=2, frame_count=n_frames)
    return header, frames


def test_round_trip():
    header, frames = _stream()
    data = write_stream(header, frames)
    back = read_stream(data)
    assert back.header == header
    assert back.frames == frames


def test_empty_stream():
    header = StreamHeader(width=16, height=16, gop_size=4, frame_count=0)
    data = write_stream(header, [])
    back = read_stream(data)
    assert back.header.frame_count == 0
    assert back.frames == []


def test_chunk_counts_follow_frame_types():
    header, frames = _stream(n_frames=3, gop_size=10)
    back = read_stream(write_stream(header, frames))
    assert [f.frame_type for f in back.frames] == ["I", "P", "P"]
    assert [len(f.chunks) for f in back.frames] == [2, 4, 4]


def test_total_size_accounting():
    header, frames = _stream()
    stream = NvcBitstream(header, frames)
    assert stream.total_bytes() == len(write_stream(header, frames))
    bpp = stream.bits_per_pixel()
    assert bpp == pytest.approx(
        8 * stream.total_bytes() / (64 * 48 * 3))


def test_bad_magic():
    header, frames = _stream()
    data = bytearray(write_stream(header, frames))
    data[0] ^= 0xFF
    with pytest.raises(BadMagicError):
        read_stream(bytes(data))


def test_every_single_byte_header_corruption_rejected():
    header, frames = _stream()
    data = write_stream(header, frames)
    header_len = 23  # 19 field bytes + 4 CRC bytes
    for pos in range(header_len):
        for flip in (0x01, 0x80):
            bad = bytearray(data)
            bad[pos] ^= flip
            with pytest.raises((BadMagicError, HeaderCorruptError,
                                TruncatedStreamError, ChunkOrderError)):
                read_stream(bytes(bad))


def test_unsupported_version():
    # A future version with a valid checksum must be rejected as such.
    import struct
    import zlib
    fields = struct.pack("<4sBIIHHI", b"NVC1", 9, 8, 8, 1, 0, 0)
    data = fields + struct.pack("<I", zlib.crc32(fields) & 0xFFFFFFFF)
    with pytest.raises(UnsupportedVersionError):
        read_stream(data)


def test_truncation_detected():
    header, frames = _stream()
    data = write_stream(header, frames)
    for cut in (5, 22, 30, len(data) - 1):
        with pytest.raises(TruncatedStreamError):
            read_stream(data[:cut])


def test_chunk_order_violation():
    header, _ = _stream(n_frames=1)
    bad = [FrameRecord("I", list(reversed(_ichunks())))]
    with pytest.raises(ChunkOrderError):
        write_stream(header, bad)


def test_p_frame_at_gop_start_rejected():
    header = StreamHeader(width=8, height=8, gop_size=4, frame_count=1)
    with pytest.raises(ChunkOrderError):
        write_stream(header, [FrameRecord("P", _pchunks())])


def test_frame_count_mismatch():
    header, frames = _stream()
    header.frame_count = 99
    with pytest.raises(ValueError):
        write_stream(header, frames)


def test_trailing_garbage_rejected():
    header, frames = _stream()
    data = write_stream(header, frames)
    with pytest.raises(ChunkOrderError):
        read_stream(data + b"\x00")


@given(payloads=st.lists(st.binary(min_size=0, max_size=64),
                         min_size=2, max_size=2),
       n_p=st.integers(0, 6))
@settings(max_examples=50, deadline=None)
def test_fuzz_round_trip(payloads, n_p):
    # Arbitrary chunk payloads survive the container bit-exactly.
    frames = [FrameRecord("I", _ichunks(tuple(payloads)))]
    frames += [FrameRecord("P", _pchunks()) for _ in range(n_p)]
    header = StreamHeader(width=32, height=32, gop_size=16,
                          frame_count=len(frames))
    assert read_stream(write_stream(header, frames)).frames == frames
