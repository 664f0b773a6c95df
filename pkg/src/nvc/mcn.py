"""Multiscale motion compensation.

The reference frame is decomposed into a five-scale feature pyramid, each
scale is backward-warped by the corresponding decoded flow, and the warped
features are aggregated coarse-to-fine into the predicted frame. A
single-scale variant (warp the frame itself with the finest flow, then
refine) is kept behind a flag as the comparison baseline.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from .errors import ShapeMismatchError
from .layers import conv, deconv

__all__ = ["NUM_SCALES", "PYRAMID_WIDTHS", "warp", "FeaturePyramidExtractor",
           "MultiscaleCompensation", "SingleScaleCompensation",
           "scale_widths"]

NUM_SCALES = 5
PYRAMID_WIDTHS = (32, 64, 96, 128, 192)


def scale_widths(width_mult: float = 1.0) -> tuple[int, ...]:
    return tuple(max(8, int(round(w * width_mult))) for w in PYRAMID_WIDTHS)


def warp(tensor: torch.Tensor, flow: torch.Tensor) -> torch.Tensor:
    """Backward-warp ``tensor`` by ``flow``: out(p) = in(p + flow(p)).

    ``flow`` is (B, 2, H, W) in pixel units, channel 0 horizontal and
    channel 1 vertical displacement. Bilinear sampling with border
    clamping; differentiable in both inputs.
    """
    if tensor.dim() != 4 or flow.dim() != 4:
        raise ShapeMismatchError("warp expects (B, C, H, W) tensors")
    b, c, h, w = tensor.shape
    if flow.shape[0] != b or flow.shape[1] != 2 or flow.shape[2:] != (h, w):
        raise ShapeMismatchError(
            f"flow shape {tuple(flow.shape)} does not match "
            f"tensor {tuple(tensor.shape)}")

    ys = torch.arange(h, dtype=tensor.dtype, device=tensor.device)
    xs = torch.arange(w, dtype=tensor.dtype, device=tensor.device)
    grid_y, grid_x = torch.meshgrid(ys, xs, indexing="ij")
    src_x = grid_x.unsqueeze(0) + flow[:, 0]
    src_y = grid_y.unsqueeze(0) + flow[:, 1]

    x0 = torch.floor(src_x)
    y0 = torch.floor(src_y)
    wx = src_x - x0
    wy = src_y - y0

    x0i = x0.long().clamp(0, w - 1)
    x1i = (x0.long() + 1).clamp(0, w - 1)
    y0i = y0.long().clamp(0, h - 1)
    y1i = (y0.long() + 1).clamp(0, h - 1)

    flat = tensor.reshape(b, c, h * w)

    def take(yi, xi):
        idx = (yi * w + xi).reshape(b, 1, h * w).expand(b, c, h * w)
        return flat.gather(2, idx).reshape(b, c, h, w)

    wx = wx.unsqueeze(1)
    wy = wy.unsqueeze(1)
    top = take(y0i, x0i) * (1 - wx) + take(y0i, x1i) * wx
    bottom = take(y1i, x0i) * (1 - wx) + take(y1i, x1i) * wx
    return top * (1 - wy) + bottom * wy


class FeaturePyramidExtractor(nn.Module):
    """Five-scale decomposition of the reference frame.

    Scale 0 comes from a stride-1 stem; each further scale applies a 3x3
    conv, ReLU, and a stride-2 5x5 conv.
    """

    def __init__(self, in_channels: int = 3, width_mult: float = 1.0):
        super().__init__()
        self.widths = scale_widths(width_mult)
        self.stem = conv(in_channels, self.widths[0], 3)
        self.down = nn.ModuleList()
        for s in range(1, NUM_SCALES):
            self.down.append(nn.Sequential(
                conv(self.widths[s - 1], self.widths[s - 1], 3), nn.ReLU(),
                conv(self.widths[s - 1], self.widths[s], 5, stride=2)))

    def forward(self, frame: torch.Tensor) -> list[torch.Tensor]:
        feats = [self.stem(frame)]
        for block in self.down:
            feats.append(block(feats[-1]))
        return feats


class MultiscaleCompensation(nn.Module):
    """Warp the reference pyramid with the decoded flows and fuse."""

    def __init__(self, in_channels: int = 3, width_mult: float = 1.0):
        super().__init__()
        self.pyramid = FeaturePyramidExtractor(in_channels, width_mult)
        w = self.pyramid.widths
        # up[s] lifts scale-(s+1) features to scale s; the coarsest sees
        # only the warped features, the rest the concatenation with the
        # features arriving from below.
        ups = []
        for s in range(NUM_SCALES - 2, -1, -1):
            cin = w[s + 1] if s == NUM_SCALES - 2 else w[s + 1] * 2
            ups.append(nn.Sequential(
                deconv(cin, w[s], 5), nn.ReLU(), conv(w[s], w[s], 3)))
        self.up = nn.ModuleList(ups)  # ordered scale 3 target .. scale 0
        self.fusion = nn.Sequential(
            nn.Conv2d(w[0] * 2, w[0], 1), nn.ReLU(), conv(w[0], 3, 3))

    def warp_pyramid(self, feats: list[torch.Tensor],
                     flows: list[torch.Tensor]) -> list[torch.Tensor]:
        if len(feats) != NUM_SCALES or len(flows) != NUM_SCALES:
            raise ShapeMismatchError(
                f"expected {NUM_SCALES} scales, got {len(feats)} features "
                f"and {len(flows)} flows")
        for s, (f, fl) in enumerate(zip(feats, flows)):
            if f.shape[-2:] != fl.shape[-2:]:
                raise ShapeMismatchError(
                    f"scale {s}: features {tuple(f.shape[-2:])} vs flow "
                    f"{tuple(fl.shape[-2:])}")
        return [warp(f, fl) for f, fl in zip(feats, flows)]

    def forward(self, reference: torch.Tensor,
                flows: list[torch.Tensor]) -> torch.Tensor:
        feats = self.pyramid(reference)
        warped = self.warp_pyramid(feats, flows)
        rising = None
        for i, s in enumerate(range(NUM_SCALES - 1, 0, -1)):
            x = warped[s] if rising is None \
                else torch.cat([warped[s], rising], dim=1)
            rising = self.up[i](x)
        pred = self.fusion(torch.cat([warped[0], rising], dim=1))
        return pred.clamp(0.0, 1.0)


class SingleScaleCompensation(nn.Module):
    """Baseline: warp the frame with the finest flow, then refine."""

    def __init__(self, width: int = 32):
        super().__init__()
        self.refine = nn.Sequential(
            conv(3, width, 3), nn.ReLU(), conv(width, width, 3), nn.ReLU(),
            conv(width, 3, 3))

    def forward(self, reference: torch.Tensor,
                flows: list[torch.Tensor]) -> torch.Tensor:
        warped = warp(reference, flows[0])
        return (warped + self.refine(warped)).clamp(0.0, 1.0)
