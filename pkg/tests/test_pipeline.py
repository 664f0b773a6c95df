import pytest
import torch

from nvc.bitstream import read_stream, write_stream
from nvc.errors import ShapeMismatchError, TruncatedStreamError
from nvc.pipeline import (CodecConfig, Gop, decode_sequence, encode_sequence,
                          rd_point, split_gops)


def test_codec_config_validation():
    cfg = CodecConfig(lambda_intra=400.0)
    assert cfg.lambda_inter == 100.0
    with pytest.raises(ValueError):
        CodecConfig(lambda_intra=0.0)
    with pytest.raises(ValueError):
        CodecConfig(distortion_metric="L7")
    with pytest.raises(ValueError):
        CodecConfig(gop_size=0)


def test_gop_validation():
    Gop(torch.rand(3, 3, 16, 16))
    with pytest.raises(ShapeMismatchError):
        Gop(torch.rand(3, 1, 16, 16))
    with pytest.raises(ValueError):
        Gop(torch.rand(2, 3, 8, 8) + 0.5)


def test_split_gops():
    assert [list(r) for r in split_gops(5, 2)] == [[0, 1], [2, 3], [4]]


def test_frame_type_pattern_21_frames():
    types = ["I" if i % 10 == 0 else "P" for i in range(21)]
    assert types == ["I"] + ["P"] * 9 + ["I"] + ["P"] * 9 + ["I"]


def test_encode_produces_expected_structure(tiny_models):
    frames = torch.rand(5, 3, 64, 64)
    stream = encode_sequence(frames, tiny_models, CodecConfig(gop_size=3))
    assert [f.frame_type for f in stream.frames] == ["I", "P", "P", "I", "P"]
    assert [len(f.chunks) for f in stream.frames] == [2, 4, 4, 2, 4]
    assert stream.header.width == 64 and stream.header.frame_count == 5


def test_intra_only_mode(tiny_models):
    frames = torch.rand(3, 3, 64, 64)
    stream = encode_sequence(frames, tiny_models,
                             CodecConfig(gop_size=8, intra_only=True))
    assert [f.frame_type for f in stream.frames] == ["I", "I", "I"]
    assert stream.header.gop_size == 1


def test_multi_gop_synchronization(tiny_models):
    # Decoder reconstructions must equal encoder-side ones bit-exactly
    # across GOP boundaries, temporal state included.
    frames = torch.rand(6, 3, 64, 64)
    stream, recons = encode_sequence(frames, tiny_models,
                                     CodecConfig(gop_size=3),
                                     return_recon=True)
    data = write_stream(stream.header, stream.frames)
    decoded = decode_sequence(data, tiny_models)
    assert torch.equal(recons, decoded)


def test_decode_twice_identical(tiny_models):
    frames = torch.rand(4, 3, 64, 64)
    stream = encode_sequence(frames, tiny_models, CodecConfig(gop_size=4))
    data = write_stream(stream.header, stream.frames)
    a = decode_sequence(data, tiny_models)
    b = decode_sequence(data, tiny_models)
    assert torch.equal(a, b)


def test_decoded_frame_count_matches_header(tiny_models):
    frames = torch.rand(5, 3, 64, 64)
    stream = encode_sequence(frames, tiny_models, CodecConfig(gop_size=2))
    decoded = decode_sequence(write_stream(stream.header, stream.frames),
                              tiny_models)
    assert decoded.shape[0] == stream.header.frame_count


def test_truncation_names_failing_frame(tiny_models):
    frames = torch.rand(4, 3, 64, 64)
    stream = encode_sequence(frames, tiny_models, CodecConfig(gop_size=4))
    data = write_stream(stream.header, stream.frames)
    with pytest.raises(TruncatedStreamError, match="frame"):
        read_stream(data[: len(data) - 10])


def test_dimension_change_rejected(tiny_models):
    bad = [torch.rand(3, 64, 64), torch.rand(3, 64, 64),
           torch.rand(3, 32, 32)]
    with pytest.raises(ShapeMismatchError, match="mid-sequence"):
        encode_sequence(bad, tiny_models, CodecConfig())


def test_padding_round_trip_through_codec(tiny_models):
    # 48x80 frames force reflect padding to 64x128; decode must crop back.
    frames = torch.rand(2, 3, 48, 80)
    stream, recons = encode_sequence(frames, tiny_models,
                                     CodecConfig(gop_size=2),
                                     return_recon=True)
    decoded = decode_sequence(write_stream(stream.header, stream.frames),
                              tiny_models)
    assert decoded.shape == frames.shape
    assert torch.equal(recons, decoded)


class TestRDPoint:
    def test_identity_reconstruction(self, tiny_models):
        frames = torch.rand(2, 3, 64, 64)
        stream = encode_sequence(frames, tiny_models, CodecConfig(gop_size=2))
        point = rd_point(frames, stream, frames.clone())
        assert point.psnr == 100.0
        assert point.ms_ssim == pytest.approx(1.0, abs=1e-9)

    def test_bpp_accounting_cross_check(self, tiny_models):
        frames = torch.rand(3, 3, 64, 64)
        stream = encode_sequence(frames, tiny_models, CodecConfig(gop_size=3))
        data = write_stream(stream.header, stream.frames)
        point = rd_point(frames, stream, frames.clone())
        expected = 8 * len(data) / (64 * 64 * 3)
        assert point.bpp == pytest.approx(expected, rel=1e-12)

    def test_shape_mismatch_rejected(self, tiny_models):
        frames = torch.rand(2, 3, 64, 64)
        stream = encode_sequence(frames, tiny_models, CodecConfig(gop_size=2))
        with pytest.raises(ShapeMismatchError):
            rd_point(frames, stream, torch.rand(2, 3, 32, 32))
