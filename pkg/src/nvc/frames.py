"""Frame ingestion and storage.

Sources: a directory of numbered PNGs, or raw planar YUV 4:2:0 (8-bit,
BT.709 limited range) with explicit dimensions. Everything is normalized
to float RGB in [0, 1], shape (T, 3, H, W).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import torch
from PIL import Image

__all__ = ["load_frames", "load_png_dir", "load_yuv420", "save_png_dir",
           "yuv420_to_rgb"]

# BT.709 limited-range -> full-range RGB.
_Y_SCALE = 255.0 / 219.0
_CR_R = 1.792741
_CB_G = -0.213249
_CR_G = -0.532909
_CB_B = 2.112402


def _frame_number(path: Path) -> tuple:
    nums = re.findall(r"\d+", path.stem)
    return (int(nums[-1]) if nums else 0, path.stem)


def load_png_dir(path: str | Path, limit: int | None = None) -> torch.Tensor:
    files = sorted(Path(path).glob("*.png"), key=_frame_number)
    if not files:
        raise FileNotFoundError(f"no .png frames in {path}")
    if limit is not None:
        files = files[:limit]
    frames = []
    for f in files:
        img = np.asarray(Image.open(f).convert("RGB"), dtype=np.float32)
        frames.append(torch.from_numpy(img).permute(2, 0, 1) / 255.0)
    return torch.stack(frames)


def save_png_dir(frames: torch.Tensor, path: str | Path,
                 prefix: str = "frame") -> list[Path]:
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, frame in enumerate(frames):
        arr = (frame.clamp(0, 1) * 255.0).round().byte()
        img = Image.fromarray(arr.permute(1, 2, 0).numpy())
        dest = out_dir / f"{prefix}_{i:05d}.png"
        img.save(dest)
        written.append(dest)
    return written


def yuv420_to_rgb(y: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(H,W) luma + (H/2,W/2) chroma planes -> (3,H,W) RGB in [0,1]."""
    u = u.repeat(2, axis=0).repeat(2, axis=1)
    v = v.repeat(2, axis=0).repeat(2, axis=1)
    yf = (y.astype(np.float32) - 16.0) * _Y_SCALE
    cb = u.astype(np.float32) - 128.0
    cr = v.astype(np.float32) - 128.0
    r = yf + _CR_R * cr
    g = yf + _CB_G * cb + _CR_G * cr
    b = yf + _CB_B * cb
    rgb = np.stack([r, g, b]) / 255.0
    return np.clip(rgb, 0.0, 1.0)


def load_yuv420(path: str | Path, width: int, height: int,
                limit: int | None = None) -> torch.Tensor:
    frame_bytes = width * height * 3 // 2
    raw = Path(path).read_bytes()
    n_frames = len(raw) // frame_bytes
    if n_frames == 0:
        raise ValueError(
            f"{path} holds no complete {width}x{height} yuv420p frame")
    if limit is not None:
        n_frames = min(n_frames, limit)
    cw, ch = width // 2, height // 2
    frames = []
    for i in range(n_frames):
        buf = np.frombuffer(raw, dtype=np.uint8, count=frame_bytes,
                            offset=i * frame_bytes)
        y = buf[: width * height].reshape(height, width)
        u = buf[width * height: width * height + cw * ch].reshape(ch, cw)
        v = buf[width * height + cw * ch:].reshape(ch, cw)
        frames.append(torch.from_numpy(yuv420_to_rgb(y, u, v)))
    return torch.stack(frames)


def load_frames(path: str | Path, size: tuple[int, int] | None = None,
                pixfmt: str = "auto", limit: int | None = None) -> torch.Tensor:
    """Dispatch on input kind: PNG directory or raw YUV file."""
    p = Path(path)
    if p.is_dir():
        return load_png_dir(p, limit)
    if pixfmt == "auto":
        pixfmt = "yuv420p" if p.suffix.lower() in (".yuv", ".raw") else ""
    if pixfmt == "yuv420p":
        if size is None:
            raise ValueError("raw YUV input needs --size WxH")
        return load_yuv420(p, size[0], size[1], limit)
    raise ValueError(f"cannot ingest {path}: unknown format")
