import numpy as np
import pytest
import torch

from nvc.frames import (load_frames, load_png_dir, load_yuv420, save_png_dir,
                        yuv420_to_rgb)


def test_png_round_trip(tmp_path):
    frames = torch.rand(3, 3, 24, 32)
    save_png_dir(frames, tmp_path)
    back = load_png_dir(tmp_path)
    assert back.shape == frames.shape
    # 8-bit quantization bounds the round-trip error at half a step.
    assert float((back - frames).abs().max()) <= 0.5 / 255 + 1e-6


def test_png_numeric_ordering(tmp_path):
    frames = torch.zeros(12, 3, 8, 8)
    for i in range(12):
        frames[i] = i / 12.0
    save_png_dir(frames, tmp_path)
    back = load_png_dir(tmp_path)
    means = [float(back[i].mean()) for i in range(12)]
    assert means == sorted(means)


def test_load_limit(tmp_path):
    save_png_dir(torch.rand(5, 3, 8, 8), tmp_path)
    assert load_png_dir(tmp_path, limit=2).shape[0] == 2


def test_empty_dir_rejected(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_png_dir(tmp_path)


class TestYuv:
    def test_bt709_grey_point(self):
        # Y=128, Cb=Cr=128 is mid grey in limited range.
        y = np.full((4, 4), 128, dtype=np.uint8)
        c = np.full((2, 2), 128, dtype=np.uint8)
        rgb = yuv420_to_rgb(y, c, c)
        expected = (128 - 16) * (255 / 219) / 255
        assert np.allclose(rgb, expected, atol=1e-6)

    def test_bt709_black_and_white(self):
        c = np.full((2, 2), 128, dtype=np.uint8)
        black = yuv420_to_rgb(np.full((4, 4), 16, dtype=np.uint8), c, c)
        white = yuv420_to_rgb(np.full((4, 4), 235, dtype=np.uint8), c, c)
        assert np.allclose(black, 0.0, atol=1e-6)
        assert np.allclose(white, 1.0, atol=1e-6)

    def test_red_cast_from_cr(self):
        y = np.full((4, 4), 128, dtype=np.uint8)
        cb = np.full((2, 2), 128, dtype=np.uint8)
        cr = np.full((2, 2), 200, dtype=np.uint8)
        rgb = yuv420_to_rgb(y, cb, cr)
        assert rgb[0].mean() > rgb[1].mean() and rgb[0].mean() > rgb[2].mean()

    def test_file_round_trip(self, tmp_path):
        w, h = 8, 6
        raw = tmp_path / "c.yuv"
        frame = (np.full((h, w), 90, np.uint8).tobytes()
                 + np.full((h // 2, w // 2), 110, np.uint8).tobytes()
                 + np.full((h // 2, w // 2), 150, np.uint8).tobytes())
        raw.write_bytes(frame * 3)
        frames = load_yuv420(raw, w, h)
        assert frames.shape == (3, 3, 6, 8)
        assert torch.equal(frames[0], frames[2])

    def test_dispatcher(self, tmp_path):
        with pytest.raises(ValueError, match="size"):
            raw = tmp_path / "x.yuv"
            raw.write_bytes(b"\x00" * 96)
            load_frames(raw)
        with pytest.raises(ValueError, match="unknown format"):
            f = tmp_path / "x.bin"
            f.write_bytes(b"\x00")
            load_frames(f)
