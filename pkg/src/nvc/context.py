"""Entropy context modeling: prior aggregation and sequential coding.

Two probability models drive the range coder:

* ``FactorizedHyperModel`` codes hyper latents with learned per-channel
  Gaussians (no context; decodable before anything else).
* ``ContextModel`` codes main latents. A causal 5x5x5 masked convolution
  over the latent volume supplies spatial context (one kernel shared by
  all channels), the decoded hyper latent supplies side information, and
  for motion an additional temporal feature plane carries the ConvLSTM
  hidden state. Everything is fused by stacked 1x1x1 convolutions into a
  per-element (mu, sigma).

Actual coding runs element-by-element in channel-major raster order
through :class:`SequentialCoder`, a float64 numpy re-evaluation of the
context network. Encoder and decoder execute the identical routine on
identical integer prefixes, which is what makes their probability tables
agree bit-for-bit; the vectorized torch forward is used only for training
and rate estimation.
"""

from __future__ import annotations

import math

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .entropy import GaussianParams, build_cum_matrix, estimate_bits
from .entropy.gaussian import SIGMA_MIN
from .layers import MaskedConv3d

__all__ = ["FactorizedHyperModel", "ContextModel", "SequentialCoder",
           "LOG_SIGMA_MIN", "LOG_SIGMA_MAX", "symbol_range_of"]

LOG_SIGMA_MIN = math.log(SIGMA_MIN)
LOG_SIGMA_MAX = math.log(256.0)


def clamp_sigma(log_sigma: torch.Tensor) -> torch.Tensor:
    return torch.exp(torch.clamp(log_sigma, LOG_SIGMA_MIN, LOG_SIGMA_MAX))


def symbol_range_of(latent: torch.Tensor) -> tuple[int, int]:
    """Per-tensor coded alphabet: observed min/max with one guard symbol."""
    return int(latent.min().item()) - 1, int(latent.max().item()) + 1


class FactorizedHyperModel(nn.Module):
    """Learned per-channel Gaussian over a hyper latent."""

    def __init__(self, channels: int):
        super().__init__()
        self.mu = nn.Parameter(torch.zeros(channels))
        self.log_sigma = nn.Parameter(torch.zeros(channels))

    def params(self, like: torch.Tensor) -> GaussianParams:
        shape = (1, -1) + (1,) * (like.dim() - 2)
        mu = self.mu.reshape(shape).expand_as(like)
        sigma = clamp_sigma(self.log_sigma).reshape(shape).expand_as(like)
        return GaussianParams(mu, sigma)

    def bits(self, hyper: torch.Tensor) -> torch.Tensor:
        return estimate_bits(hyper, self.params(hyper))

    def _tables(self, shape, sym_range):
        c, h, w = shape
        mu = self.mu.detach().double().numpy()
        sigma = np.exp(np.clip(self.log_sigma.detach().double().numpy(),
                               LOG_SIGMA_MIN, LOG_SIGMA_MAX))
        mu = np.repeat(mu, h * w)
        sigma = np.repeat(sigma, h * w)
        return build_cum_matrix(mu, sigma, sym_range)

    def encode(self, encoder, hyper: torch.Tensor,
               sym_range: tuple[int, int]) -> None:
        c, h, w = hyper.shape[-3:]
        symbols = hyper.detach().reshape(-1).long().numpy() - sym_range[0]
        encoder.encode_all(symbols, self._tables((c, h, w), sym_range))

    def decode(self, decoder, shape, sym_range) -> torch.Tensor:
        idx = decoder.decode_all(self._tables(shape, sym_range))
        values = idx + sym_range[0]
        return torch.from_numpy(values.reshape(shape)).float()


class ContextModel(nn.Module):
    """Prior aggregation: spatial + hyper (+ temporal) -> (mu, sigma)."""

    def __init__(self, ctx_features: int = 12, fusion_width: int = 32,
                 use_temporal: bool = False):
        super().__init__()
        self.use_temporal = use_temporal
        self.spatial = MaskedConv3d(ctx_features, 5)
        static_feats = 4 if use_temporal else 2
        fin = ctx_features + static_feats
        self.fusion = nn.Sequential(
            nn.Conv3d(fin, fusion_width, 1), nn.ReLU(),
            nn.Conv3d(fusion_width, fusion_width, 1), nn.ReLU(),
            nn.Conv3d(fusion_width, 2, 1))

    @staticmethod
    def as_volume_features(planes: torch.Tensor,
                           latent_channels: int) -> torch.Tensor:
        """(B, k*C, H, W) feature map -> (B, k, C, H, W) volume features."""
        b, kc, h, w = planes.shape
        return planes.reshape(b, kc // latent_channels, latent_channels, h, w)

    def forward(self, latent: torch.Tensor, hyper_feats: torch.Tensor,
                temporal_feats: torch.Tensor | None = None) -> GaussianParams:
        """Vectorized path (training / rate estimation).

        ``latent``: (B, C, H, W); ``hyper_feats``: (B, 2, C, H, W);
        ``temporal_feats``: (B, 2, C, H, W) when temporal priors are on.
        """
        b, c, h, w = latent.shape
        ctx = self.spatial(latent.unsqueeze(1))
        feats = [ctx, hyper_feats]
        if self.use_temporal:
            if temporal_feats is None:
                temporal_feats = torch.zeros_like(hyper_feats)
            feats.append(temporal_feats)
        out = self.fusion(torch.cat(feats, dim=1))
        mu = out[:, 0]
        sigma = clamp_sigma(out[:, 1])
        return GaussianParams(mu, sigma)

    def bits(self, latent, hyper_feats, temporal_feats=None) -> torch.Tensor:
        return estimate_bits(
            latent, self.forward(latent, hyper_feats, temporal_feats))


class SequentialCoder:
    """Element-by-element coding pass shared by encoder and decoder.

    Re-evaluates the context model in float64 numpy so both sides of the
    codec run literally the same arithmetic. One instance per model; the
    weights are snapshotted at construction.
    """

    def __init__(self, ctx: ContextModel):
        self.use_temporal = ctx.use_temporal
        k = ctx.spatial.out_channels
        self.kernel = ctx.spatial.kernel_size[0]
        self.w_ctx = (ctx.spatial.masked_weight().detach().double()
                      .reshape(k, -1).numpy())
        self.b_ctx = ctx.spatial.bias.detach().double().numpy()
        self.mlp = []
        for layer in ctx.fusion:
            if isinstance(layer, nn.Conv3d):
                w = layer.weight.detach().double().numpy()
                self.mlp.append((w.reshape(w.shape[0], w.shape[1]),
                                 layer.bias.detach().double().numpy()))

    def _mu_sigma(self, window: np.ndarray, static_vec: np.ndarray):
        ctx = self.w_ctx @ window + self.b_ctx
        x = np.concatenate([ctx, static_vec])
        last = len(self.mlp) - 1
        for i, (w, b) in enumerate(self.mlp):
            x = w @ x + b
            if i != last:
                np.maximum(x, 0.0, out=x)
        sigma = math.exp(min(max(x[1], LOG_SIGMA_MIN), LOG_SIGMA_MAX))
        return x[0], sigma

    def _run(self, shape, static_feats, sym_range, *, encoder=None,
             decoder=None, latent=None, record=None):
        c_dim, h_dim, w_dim = shape
        lo, hi = sym_range
        pad = self.kernel // 2
        volume = np.zeros((c_dim + 2 * pad, h_dim + 2 * pad, w_dim + 2 * pad))
        if latent is not None:
            volume[pad:pad + c_dim, pad:pad + h_dim, pad:pad + w_dim] = latent
        out = np.zeros(shape, dtype=np.int64)
        static = np.ascontiguousarray(static_feats, dtype=np.float64)
        k = self.kernel
        for c in range(c_dim):
            for y in range(h_dim):
                for x in range(w_dim):
                    window = volume[c:c + k, y:y + k, x:x + k].ravel()
                    mu, sigma = self._mu_sigma(window, static[:, c, y, x])
                    cum = build_cum_matrix(
                        np.array([mu]), np.array([sigma]), (lo, hi))[0]
                    if record is not None:
                        record.append(cum)
                    if encoder is not None:
                        sym = int(latent[c, y, x])
                        encoder.encode(sym - lo, cum)
                    else:
                        sym = int(decoder.decode(cum)) + lo
                        volume[c + pad, y + pad, x + pad] = sym
                    out[c, y, x] = sym
        return out

    def encode(self, encoder, latent: np.ndarray, static_feats: np.ndarray,
               sym_range: tuple[int, int], record=None) -> None:
        """Code an integer latent (C, H, W); prefix-causal like decode."""
        self._run(latent.shape, static_feats, sym_range, encoder=encoder,
                  latent=latent, record=record)

    def model_params(self, latent: np.ndarray, static_feats: np.ndarray):
        """Per-element (mu, sigma) maps; diagnostic mirror of the torch path."""
        pad = self.kernel // 2
        c_dim, h_dim, w_dim = latent.shape
        volume = np.zeros((c_dim + 2 * pad, h_dim + 2 * pad, w_dim + 2 * pad))
        volume[pad:pad + c_dim, pad:pad + h_dim, pad:pad + w_dim] = latent
        static = np.ascontiguousarray(static_feats, dtype=np.float64)
        mu = np.zeros(latent.shape)
        sigma = np.zeros(latent.shape)
        k = self.kernel
        for c in range(c_dim):
            for y in range(h_dim):
                for x in range(w_dim):
                    window = volume[c:c + k, y:y + k, x:x + k].ravel()
                    mu[c, y, x], sigma[c, y, x] = self._mu_sigma(
                        window, static[:, c, y, x])
        return mu, sigma

    def decode(self, decoder, shape, static_feats: np.ndarray,
               sym_range: tuple[int, int], record=None) -> np.ndarray:
        return self._run(shape, static_feats, sym_range, decoder=decoder,
                         record=record)
