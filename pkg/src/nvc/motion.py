"""One-stage motion compressor.

The concatenated (reference, current) pair is transformed into quantized
motion features; a pyramidal decoder turns them into five decoded flow
fields, one per scale. Entropy coding of the motion features fuses the
causal spatial context and hyper priors with a temporal prior: the hidden
state of a ConvLSTM driven by the previous frames' quantized motion
features. The state is rebuilt identically on the decoder side from the
decoded latents, which is what keeps the temporal context decodable.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .backbone import HyperDecoder, HyperEncoder, MainEncoder, VaeConfig
from .bitstream import Chunk
from .context import (ContextModel, FactorizedHyperModel, SequentialCoder,
                      symbol_range_of)
from .entropy import (RangeDecoder, RangeEncoder, estimate_bits,
                      universal_quantize)
from .errors import ShapeMismatchError
from .layers import LAM, ConvLSTMCell, conv, deconv

__all__ = ["TemporalState", "MultiscaleFlow", "PyramidFlowDecoder",
           "MotionCodec", "flow_to_color"]

NUM_SCALES = 5


def flow_to_color(flow: torch.Tensor) -> "np.ndarray":
    """(2, H, W) flow -> (H, W, 3) uint8 color-wheel visualization.

    Hue encodes direction, saturation magnitude (normalized to the frame's
    own maximum).
    """
    import numpy as np

    fx = flow[0].detach().cpu().numpy()
    fy = flow[1].detach().cpu().numpy()
    mag = np.hypot(fx, fy)
    ang = (np.arctan2(fy, fx) + np.pi) / (2 * np.pi)  # [0, 1)
    sat = mag / (mag.max() + 1e-8)
    h6 = ang * 6.0
    i = np.floor(h6).astype(int) % 6
    f = h6 - np.floor(h6)
    v = np.ones_like(sat)
    p, q, t = v * (1 - sat), v * (1 - sat * f), v * (1 - sat * (1 - f))
    lut = [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)]
    rgb = np.zeros(sat.shape + (3,), dtype=np.float64)
    for k, (r, g, b) in enumerate(lut):
        mask = i == k
        rgb[mask, 0] = r[mask]
        rgb[mask, 1] = g[mask]
        rgb[mask, 2] = b[mask]
    return (rgb * 255.0).round().astype("uint8")


@dataclass
class TemporalState:
    """ConvLSTM (hidden, cell) pair carried across the P-frames of a GOP."""

    h: torch.Tensor
    c: torch.Tensor

    @classmethod
    def zeros(cls, channels: int, height: int, width: int,
              batch: int = 1, device=None) -> "TemporalState":
        shape = (batch, channels, height, width)
        return cls(torch.zeros(shape, device=device),
                   torch.zeros(shape, device=device))

    def detach(self) -> "TemporalState":
        return TemporalState(self.h.detach(), self.c.detach())


@dataclass
class MultiscaleFlow:
    """Decoded flow pyramid; ``flows[s]`` has shape (B, 2, H/2^s, W/2^s)."""

    flows: list[torch.Tensor]

    def __post_init__(self):
        if len(self.flows) != NUM_SCALES:
            raise ShapeMismatchError(
                f"expected {NUM_SCALES} flow scales, got {len(self.flows)}")
        h, w = self.flows[0].shape[-2:]
        for s, f in enumerate(self.flows):
            if f.shape[1] != 2:
                raise ShapeMismatchError(f"scale {s}: flow must have 2 channels")
            if f.shape[-2:] != (h >> s, w >> s):
                raise ShapeMismatchError(
                    f"scale {s}: {tuple(f.shape[-2:])} != "
                    f"{(h >> s, w >> s)}")
            if not torch.isfinite(f).all():
                raise ValueError(f"scale {s}: non-finite flow values")

    def __iter__(self):
        return iter(self.flows)

    def __getitem__(self, s):
        return self.flows[s]


class FlowHead(nn.Module):
    """Two 3x3 convs emitting a 2-channel flow; final layer zero-init so
    an untrained decoder starts from zero motion."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = conv(channels, channels, 3)
        self.conv2 = conv(channels, 2, 3)
        nn.init.zeros_(self.conv2.weight)
        nn.init.zeros_(self.conv2.bias)

    def forward(self, x):
        return self.conv2(F.relu(self.conv1(x)))


class PyramidFlowDecoder(nn.Module):
    """Main decoder replacement: shared trunk, one flow head per scale."""

    def __init__(self, cfg: VaeConfig):
        super().__init__()
        m, w = cfg.latent_channels, cfg.base_width
        widths = [m, w, w, w, w]
        self.blocks = nn.ModuleList(LAM(c) for c in widths)
        self.ups = nn.ModuleList(deconv(widths[i], widths[i + 1], 5)
                                 for i in range(NUM_SCALES - 1))
        self.heads = nn.ModuleList(FlowHead(c) for c in widths)

    def forward(self, latent: torch.Tensor) -> MultiscaleFlow:
        flows = []
        x = latent
        for s in range(NUM_SCALES):
            x = self.blocks[s](x)
            flows.append(self.heads[s](x))
            if s < NUM_SCALES - 1:
                x = self.ups[s](x)
        # Trunk runs coarse-to-fine; scale 0 is the finest.
        return MultiscaleFlow(list(reversed(flows)))


class MotionCodec(nn.Module):
    """Motion feature compressor with spatiotemporal entropy context."""

    chunk_prefix = "motion"

    def __init__(self, cfg: VaeConfig | None = None, ctx_features: int = 12,
                 fusion_width: int = 32, use_temporal: bool = True):
        super().__init__()
        if cfg is None:
            cfg = VaeConfig(in_channels=6, stage_block="lam")
        if cfg.in_channels != 6:
            raise ValueError("motion encoder consumes a 6-channel pair")
        self.cfg = cfg
        self.use_temporal = use_temporal
        self.encoder = MainEncoder(cfg)
        self.flow_decoder = PyramidFlowDecoder(cfg)
        self.hyper_encoder = HyperEncoder(cfg)
        self.hyper_decoder = HyperDecoder(cfg)
        self.hyper_prior = FactorizedHyperModel(cfg.hyper_channels)
        self.context = ContextModel(ctx_features, fusion_width,
                                    use_temporal=use_temporal)
        if use_temporal:
            self.tum = ConvLSTMCell(cfg.latent_channels, cfg.latent_channels)
            # Bias-free so a zero hidden state contributes nothing: the
            # first P-frame's entropy model sees spatial+hyper priors only,
            # and severing the temporal input exactly reproduces the
            # no-temporal-priors configuration.
            self.temporal_adapter = nn.Conv2d(
                cfg.latent_channels, 2 * cfg.latent_channels, 1, bias=False)

    def initial_state(self, frame_hw: tuple[int, int], batch: int = 1,
                      device=None) -> TemporalState:
        h, w = frame_hw
        return TemporalState.zeros(self.cfg.latent_channels, h // 16, w // 16,
                                   batch, device)

    def _hyper_volume(self, z_hat):
        return ContextModel.as_volume_features(
            self.hyper_decoder(z_hat), self.cfg.latent_channels)

    def _temporal_volume(self, state: TemporalState | None):
        if not self.use_temporal or state is None:
            return None
        return ContextModel.as_volume_features(
            self.temporal_adapter(state.h), self.cfg.latent_channels)

    def tum_update(self, latent: torch.Tensor,
                   state: TemporalState) -> TemporalState:
        if not self.use_temporal:
            return state
        h, c = self.tum(latent, state.h, state.c)
        return TemporalState(h, c)

    def stham_params(self, latent, hyper_feats, state):
        """(mu, sigma) from spatial context, hyper priors and h_{t-1}."""
        return self.context(latent, hyper_feats, self._temporal_volume(state))

    def forward(self, reference: torch.Tensor, current: torch.Tensor,
                state: TemporalState, mode: str = "train",
                noise_seed: int | None = None) -> dict:
        y = self.encoder(torch.cat([reference, current], dim=1))
        y_hat = universal_quantize(y, mode, noise_seed, origin="motion.main")
        z = self.hyper_encoder(y)
        z_hat = universal_quantize(
            z, mode, None if noise_seed is None else noise_seed + 1,
            origin="motion.hyper")
        params = self.stham_params(y_hat, self._hyper_volume(z_hat), state)
        bits = estimate_bits(y_hat, params) + self.hyper_prior.bits(z_hat)
        flows = self.flow_decoder(y_hat)
        new_state = self.tum_update(y_hat, state)
        return {"flows": flows, "latent": y_hat, "bits": bits,
                "state": new_state, "params": params}

    @torch.no_grad()
    def compress(self, reference: torch.Tensor, current: torch.Tensor,
                 state: TemporalState, record_tables: list | None = None):
        assert reference.shape[0] == 1
        y = self.encoder(torch.cat([reference, current], dim=1))
        y_hat = universal_quantize(y, "infer", origin="motion.main")
        z_hat = universal_quantize(self.hyper_encoder(y), "infer",
                                   origin="motion.hyper")

        z_range = symbol_range_of(z_hat)
        enc = RangeEncoder()
        self.hyper_prior.encode(enc, z_hat[0], z_range)
        hyper_chunk = Chunk("motion_hyper", *z_range, enc.finish())

        static = self._static_features(z_hat, state)
        y_range = symbol_range_of(y_hat)
        enc = RangeEncoder()
        SequentialCoder(self.context).encode(
            enc, y_hat[0].long().numpy(), static, y_range,
            record=record_tables)
        main_chunk = Chunk("motion_main", *y_range, enc.finish())

        flows = self.flow_decoder(y_hat)
        return [hyper_chunk, main_chunk], flows, self.tum_update(y_hat, state)

    @torch.no_grad()
    def decompress(self, chunks: list[Chunk], state: TemporalState,
                   frame_hw: tuple[int, int],
                   record_tables: list | None = None):
        hyper_chunk, main_chunk = chunks
        lh, lw = frame_hw[0] // 16, frame_hw[1] // 16

        dec = RangeDecoder(hyper_chunk.payload)
        z_hat = self.hyper_prior.decode(
            dec, (self.cfg.hyper_channels, lh // 4, lw // 4),
            (hyper_chunk.sym_min, hyper_chunk.sym_max)).unsqueeze(0)
        dec.verify()

        static = self._static_features(z_hat, state)
        dec = RangeDecoder(main_chunk.payload)
        latent = SequentialCoder(self.context).decode(
            dec, (self.cfg.latent_channels, lh, lw), static,
            (main_chunk.sym_min, main_chunk.sym_max), record=record_tables)
        dec.verify()

        y_hat = torch.from_numpy(latent).float().unsqueeze(0)
        flows = self.flow_decoder(y_hat)
        return flows, self.tum_update(y_hat, state)

    def _static_features(self, z_hat, state):
        feats = [self._hyper_volume(z_hat)]
        temporal = self._temporal_volume(state)
        if temporal is not None:
            feats.append(temporal)
        return torch.cat(feats, dim=1)[0].double().numpy()
