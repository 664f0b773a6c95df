"""Reusable VAE compression skeleton.

Main encoder: four stages of strided conv + stacked blocks, 16x total
downsampling, attention at the bottleneck. Hyper encoder: two further
stride-2 stages producing the side-information latent at 1/64 of the
frame. Decoders mirror their encoders; the hyper decoder emits two
feature planes per latent channel for the entropy-context fusion.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import torch
import torch.nn.functional as F
from torch import nn

from .layers import LAM, NLAM, ResidualBlock, conv, deconv

__all__ = ["VaeConfig", "MainEncoder", "MainDecoder", "HyperEncoder",
           "HyperDecoder", "pad_frame", "crop_frame", "PAD_MULTIPLE"]

PAD_MULTIPLE = 64  # 16x main latent, a further 4x hyper latent


@dataclass
class VaeConfig:
    in_channels: int = 3
    out_channels: int = 3
    latent_channels: int = 192
    base_width: int = 128
    hyper_channels: int = 192
    residual_blocks_per_stage: int = 3
    # Bottleneck attention; LAM drops the all-pairs affinity branch.
    attention_kind: str = "NLAM"
    # "residual" for intra/res; "lam" swaps in local attention gates
    # for the motion compressor's stages.
    stage_block: str = "residual"
    downsample_factor_main: int = 16
    downsample_factor_hyper: int = 4

    def __post_init__(self):
        if self.latent_channels <= 0:
            raise ValueError("latent_channels must be positive")
        if self.attention_kind not in ("NLAM", "LAM"):
            raise ValueError(f"unknown attention kind {self.attention_kind}")
        if self.stage_block not in ("residual", "lam"):
            raise ValueError(f"unknown stage block {self.stage_block}")
        if self.downsample_factor_main != 16 or self.downsample_factor_hyper != 4:
            raise ValueError("backbone is fixed at 16x main / 4x hyper")

    def scaled(self, width_mult: float) -> "VaeConfig":
        def s(n):
            return max(8, int(round(n * width_mult)))
        return replace(self, latent_channels=s(self.latent_channels),
                       base_width=s(self.base_width),
                       hyper_channels=s(self.hyper_channels))


def _attention(cfg: VaeConfig, channels: int):
    return NLAM(channels) if cfg.attention_kind == "NLAM" else LAM(channels)


def _stage_blocks(cfg: VaeConfig, channels: int) -> nn.Sequential:
    if cfg.stage_block == "lam":
        return nn.Sequential(LAM(channels))
    return nn.Sequential(*(ResidualBlock(channels)
                           for _ in range(cfg.residual_blocks_per_stage)))


def pad_frame(x: torch.Tensor, multiple: int = PAD_MULTIPLE) -> torch.Tensor:
    """Pad the last two dims up to a multiple; reflect where possible."""
    h, w = x.shape[-2:]
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph == 0 and pw == 0:
        return x
    mode = "reflect" if ph < h and pw < w else "replicate"
    return F.pad(x, (0, pw, 0, ph), mode=mode)


def crop_frame(x: torch.Tensor, height: int, width: int) -> torch.Tensor:
    return x[..., :height, :width]


def _check_divisible(x: torch.Tensor) -> None:
    h, w = x.shape[-2:]
    if h % PAD_MULTIPLE or w % PAD_MULTIPLE:
        raise ValueError(
            f"input {h}x{w} not padded to a multiple of {PAD_MULTIPLE}")


class MainEncoder(nn.Module):
    """Analysis transform: (in_channels, H, W) -> (latent, H/16, W/16)."""

    def __init__(self, cfg: VaeConfig):
        super().__init__()
        w, m = cfg.base_width, cfg.latent_channels
        widths = [cfg.in_channels, w, w, w, m]
        stages = []
        for i in range(4):
            stages += [conv(widths[i], widths[i + 1], 5, stride=2),
                       _stage_blocks(cfg, widths[i + 1])]
        self.stages = nn.Sequential(*stages)
        self.attention = _attention(cfg, m)

    def forward(self, x):
        _check_divisible(x)
        return self.attention(self.stages(x))


class MainDecoder(nn.Module):
    """Synthesis transform mirroring :class:`MainEncoder`."""

    def __init__(self, cfg: VaeConfig):
        super().__init__()
        w, m = cfg.base_width, cfg.latent_channels
        self.attention = _attention(cfg, m)
        widths = [m, w, w, w]
        stages = []
        for i in range(3):
            stages += [_stage_blocks(cfg, widths[i]),
                       deconv(widths[i], widths[i + 1], 5)]
        stages += [_stage_blocks(cfg, w), deconv(w, cfg.out_channels, 5)]
        self.stages = nn.Sequential(*stages)

    def forward(self, latent):
        return self.stages(self.attention(latent))


class HyperEncoder(nn.Module):
    """(latent, H', W') -> (hyper, H'/4, W'/4); two strided layers."""

    def __init__(self, cfg: VaeConfig):
        super().__init__()
        m, h = cfg.latent_channels, cfg.hyper_channels
        self.conv1 = conv(m, h, 5, stride=2)
        self.conv2 = conv(h, h, 5, stride=2)
        self.attention = _attention(cfg, h)

    def forward(self, latent):
        x = self.conv2(F.relu(self.conv1(latent)))
        return self.attention(x)


class HyperDecoder(nn.Module):
    """Hyper latent -> per-element prior features at main-latent size.

    Output has ``2 * latent_channels`` channels, read by the context
    fusion as two feature planes per latent channel.
    """

    def __init__(self, cfg: VaeConfig):
        super().__init__()
        m, h = cfg.latent_channels, cfg.hyper_channels
        self.attention = _attention(cfg, h)
        self.deconv1 = deconv(h, h, 5)
        self.deconv2 = deconv(h, 2 * m, 5)

    def forward(self, hyper):
        x = self.attention(hyper)
        return self.deconv2(F.relu(self.deconv1(x)))
