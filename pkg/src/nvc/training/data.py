"""Procedural training clips with known ground-truth motion.

Smooth random textures under global translation, rotation, zoom, or a
moving occluder. Everything is driven by an explicit ``torch.Generator``
so sampling is reproducible and resumable. User-supplied frame folders
can be mixed in through :func:`folder_clip_sampler`.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F

from ..frames import load_png_dir
from ..mcn import warp

__all__ = ["CLIP_KINDS", "smooth_texture", "make_clip", "sample_clips",
           "folder_clip_sampler"]

CLIP_KINDS = ("static", "translate", "rotate", "zoom", "occlude")


def smooth_texture(gen: torch.Generator, channels: int, height: int,
                   width: int, cells: int = 8) -> torch.Tensor:
    """Band-limited random texture in [0.05, 0.95]."""
    gh = max(2, height // cells)
    gw = max(2, width // cells)
    coarse = torch.rand((1, channels, gh, gw), generator=gen)
    up = F.interpolate(coarse, size=(height, width), mode="bicubic",
                       align_corners=False)
    lo, hi = up.min(), up.max()
    return (0.05 + 0.9 * (up - lo) / (hi - lo + 1e-8))[0]


def _crop_shifted(canvas: torch.Tensor, margin: int, dx: float, dy: float,
                  height: int, width: int) -> torch.Tensor:
    """Subpixel window of the canvas displaced by (dx, dy)."""
    flow = canvas.new_zeros((1, 2) + canvas.shape[-2:])
    flow[:, 0] = dx
    flow[:, 1] = dy
    shifted = warp(canvas.unsqueeze(0), flow)[0]
    return shifted[:, margin:margin + height, margin:margin + width]


def _affine_frame(canvas: torch.Tensor, angle: float, scale: float,
                  height: int, width: int) -> torch.Tensor:
    ch, cw = canvas.shape[-2:]
    cos = math.cos(angle) * scale
    sin = math.sin(angle) * scale
    # Map output crop coords into canvas coords (normalized units).
    theta = torch.tensor([[cos * width / cw, -sin * height / cw, 0.0],
                          [sin * width / ch, cos * height / ch, 0.0]])
    grid = F.affine_grid(theta.unsqueeze(0), (1, 3, height, width),
                         align_corners=False)
    out = F.grid_sample(canvas.unsqueeze(0), grid, mode="bilinear",
                        padding_mode="border", align_corners=False)
    return out[0]


def make_clip(kind: str, n_frames: int, size: int, gen: torch.Generator,
              max_speed: float = 3.0) -> tuple[torch.Tensor, dict]:
    """One synthetic clip (T, 3, size, size) plus motion metadata."""
    if kind not in CLIP_KINDS:
        raise ValueError(f"unknown clip kind {kind!r}")
    margin = int(math.ceil(max_speed * n_frames)) + 4
    canvas = smooth_texture(gen, 3, size + 2 * margin, size + 2 * margin)

    if kind == "static":
        frame = canvas[:, margin:margin + size, margin:margin + size]
        return frame.unsqueeze(0).repeat(n_frames, 1, 1, 1), {"kind": kind}

    if kind == "translate":
        v = (torch.rand(2, generator=gen) * 2 - 1) * max_speed
        frames = [_crop_shifted(canvas, margin, float(v[0]) * t,
                                float(v[1]) * t, size, size)
                  for t in range(n_frames)]
        return torch.stack(frames), {"kind": kind,
                                     "velocity": (float(v[0]), float(v[1]))}

    if kind == "rotate":
        rate = float(torch.rand((), generator=gen) * 0.04 + 0.01)
        sign = 1.0 if torch.rand((), generator=gen) > 0.5 else -1.0
        frames = [_affine_frame(canvas, sign * rate * t, 1.0, size, size)
                  for t in range(n_frames)]
        return torch.stack(frames), {"kind": kind, "rate": sign * rate}

    if kind == "zoom":
        rate = float(torch.rand((), generator=gen) * 0.03 + 0.01)
        sign = 1.0 if torch.rand((), generator=gen) > 0.5 else -1.0
        frames = [_affine_frame(canvas, 0.0, 1.0 + sign * rate * t,
                                size, size)
                  for t in range(n_frames)]
        return torch.stack(frames), {"kind": kind, "rate": sign * rate}

    # occlude: translating background plus a faster foreground patch
    bg_v = (torch.rand(2, generator=gen) * 2 - 1) * max_speed * 0.5
    fg_v = (torch.rand(2, generator=gen) * 2 - 1) * max_speed
    patch = smooth_texture(gen, 3, size, size)
    side = size // 3
    x0 = int(torch.randint(0, size - side, (1,), generator=gen))
    y0 = int(torch.randint(0, size - side, (1,), generator=gen))
    frames = []
    for t in range(n_frames):
        bg = _crop_shifted(canvas, margin, float(bg_v[0]) * t,
                           float(bg_v[1]) * t, size, size)
        px = min(max(x0 + int(round(float(fg_v[0]) * t)), 0), size - side)
        py = min(max(y0 + int(round(float(fg_v[1]) * t)), 0), size - side)
        frame = bg.clone()
        frame[:, py:py + side, px:px + side] = \
            patch[:, py:py + side, px:px + side]
        frames.append(frame)
    return torch.stack(frames), {"kind": kind}


def sample_clips(gen: torch.Generator, kinds, batch: int, n_frames: int,
                 size: int, max_speed: float = 3.0) -> torch.Tensor:
    """Batch of clips (B, T, 3, size, size), kind drawn per item."""
    kinds = tuple(kinds)
    clips = []
    for _ in range(batch):
        k = kinds[int(torch.randint(len(kinds), (1,), generator=gen))]
        clip, _ = make_clip(k, n_frames, size, gen, max_speed)
        clips.append(clip)
    return torch.stack(clips)


def folder_clip_sampler(path, n_frames: int, size: int):
    """Sampler over a user-supplied frame folder: random temporal windows
    and spatial crops."""
    frames = load_png_dir(path)
    if frames.shape[0] < n_frames:
        raise ValueError(f"{path} has fewer than {n_frames} frames")
    h, w = frames.shape[-2:]
    if h < size or w < size:
        raise ValueError(f"{path} frames smaller than crop {size}")

    def sample(gen: torch.Generator, batch: int) -> torch.Tensor:
        clips = []
        for _ in range(batch):
            t0 = int(torch.randint(frames.shape[0] - n_frames + 1, (1,),
                                   generator=gen))
            y0 = int(torch.randint(h - size + 1, (1,), generator=gen))
            x0 = int(torch.randint(w - size + 1, (1,), generator=gen))
            clips.append(frames[t0:t0 + n_frames, :,
                                y0:y0 + size, x0:x0 + size])
        return torch.stack(clips)

    return sample
