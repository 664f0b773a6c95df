"""Shared network building blocks for the three compressors."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

__all__ = [
    "conv", "deconv", "ResidualBlock", "NonlocalBlock", "AttentionGate",
    "NLAM", "LAM", "MaskedConv3d", "ConvLSTMCell",
]


def conv(cin: int, cout: int, kernel: int = 5, stride: int = 1) -> nn.Conv2d:
    return nn.Conv2d(cin, cout, kernel, stride=stride, padding=kernel // 2)


def deconv(cin: int, cout: int, kernel: int = 5) -> nn.ConvTranspose2d:
    """Stride-2 transposed conv sized for an exact x2 upsampling."""
    return nn.ConvTranspose2d(cin, cout, kernel, stride=2,
                              padding=kernel // 2, output_padding=1)


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = conv(channels, channels, 3)
        self.conv2 = conv(channels, channels, 3)

    def forward(self, x):
        return x + self.conv2(F.relu(self.conv1(x)))


class NonlocalBlock(nn.Module):
    """All-pairs affinity block (embedded-Gaussian form, residual)."""

    def __init__(self, channels: int):
        super().__init__()
        inner = max(channels // 2, 1)
        self.inner = inner
        self.theta = nn.Conv2d(channels, inner, 1)
        self.phi = nn.Conv2d(channels, inner, 1)
        self.g = nn.Conv2d(channels, inner, 1)
        self.out = nn.Conv2d(inner, channels, 1)

    def attention(self, x):
        b, _, h, w = x.shape
        q = self.theta(x).flatten(2).transpose(1, 2)   # (b, hw, inner)
        k = self.phi(x).flatten(2)                     # (b, inner, hw)
        return torch.softmax(q @ k, dim=-1)            # (b, hw, hw)

    def forward(self, x):
        b, _, h, w = x.shape
        v = self.g(x).flatten(2).transpose(1, 2)       # (b, hw, inner)
        y = self.attention(x) @ v
        y = y.transpose(1, 2).reshape(b, self.inner, h, w)
        return x + self.out(y)


class AttentionGate(nn.Module):
    """Residual gating: ``x * sigmoid(mask_branch(x)) + x``.

    The mask branch is three residual blocks plus a 1x1 conv; NLAM
    prepends an all-pairs affinity block so the gate sees global context,
    LAM keeps it purely local.
    """

    def __init__(self, channels: int, nonlocal_context: bool):
        super().__init__()
        self.nonlocal_block = NonlocalBlock(channels) if nonlocal_context \
            else None
        self.local_stack = nn.Sequential(
            ResidualBlock(channels), ResidualBlock(channels),
            ResidualBlock(channels))
        self.gate_conv = nn.Conv2d(channels, channels, 1)

    def gate(self, x):
        y = x if self.nonlocal_block is None else self.nonlocal_block(x)
        return torch.sigmoid(self.gate_conv(self.local_stack(y)))

    def forward(self, x):
        return x * self.gate(x) + x


def NLAM(channels: int) -> AttentionGate:
    return AttentionGate(channels, nonlocal_context=True)


def LAM(channels: int) -> AttentionGate:
    return AttentionGate(channels, nonlocal_context=False)


class MaskedConv3d(nn.Conv3d):
    """Causal 5x5x5 context convolution over the latent volume.

    The latent (C, H, W) is treated as a depth-C volume with one feature
    channel, so the kernel is shared across latent channels. The mask
    zeroes the center tap and every tap at or after it in channel-major
    raster order (channel, then row, then column): the features for
    element i depend only on elements decoded before i.
    """

    def __init__(self, features: int, kernel: int = 5):
        super().__init__(1, features, kernel, padding=kernel // 2)
        mask = torch.zeros(kernel, kernel, kernel)
        c = kernel // 2
        mask[:c] = 1
        mask[c, :c] = 1
        mask[c, c, :c] = 1
        self.register_buffer("mask", mask[None, None])

    def masked_weight(self) -> torch.Tensor:
        return self.weight * self.mask

    def forward(self, volume):
        return F.conv3d(volume, self.masked_weight(), self.bias,
                        padding=self.padding)


class ConvLSTMCell(nn.Module):
    """Single convolutional LSTM step over feature maps."""

    def __init__(self, in_channels: int, hidden_channels: int,
                 kernel: int = 3):
        super().__init__()
        self.hidden_channels = hidden_channels
        self.gates = nn.Conv2d(in_channels + hidden_channels,
                               4 * hidden_channels, kernel,
                               padding=kernel // 2)

    def forward(self, x, h, c):
        gi, gf, go, gc = self.gates(torch.cat([x, h], dim=1)).chunk(4, dim=1)
        i = torch.sigmoid(gi)
        f = torch.sigmoid(gf)
        o = torch.sigmoid(go)
        c_new = f * c + i * torch.tanh(gc)
        h_new = o * torch.tanh(c_new)
        return h_new, c_new
