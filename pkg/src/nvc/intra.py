"""Intra-frame compressor.

A full VAE compression engine with spatial + hyper entropy context (no
temporal inference). ``SpatialHyperCodec`` carries everything; the
residual compressor instantiates the same machinery with its own value
range and chunk kinds.
"""

from __future__ import annotations

import torch
from torch import nn

from .backbone import (HyperDecoder, HyperEncoder, MainDecoder, MainEncoder,
                       VaeConfig)
from .bitstream import Chunk
from .context import (ContextModel, FactorizedHyperModel, SequentialCoder,
                      symbol_range_of)
from .entropy import RangeDecoder, RangeEncoder, universal_quantize

__all__ = ["SpatialHyperCodec", "IntraCodec"]


class SpatialHyperCodec(nn.Module):
    """VAE compressor with autoregressive-spatial + hyper priors."""

    chunk_prefix = "intra"
    output_clamp = (0.0, 1.0)

    def __init__(self, cfg: VaeConfig, ctx_features: int = 12,
                 fusion_width: int = 32):
        super().__init__()
        self.cfg = cfg
        self.encoder = MainEncoder(cfg)
        self.decoder = MainDecoder(cfg)
        self.hyper_encoder = HyperEncoder(cfg)
        self.hyper_decoder = HyperDecoder(cfg)
        self.hyper_prior = FactorizedHyperModel(cfg.hyper_channels)
        self.context = ContextModel(ctx_features, fusion_width,
                                    use_temporal=False)

    def _hyper_volume(self, z_hat: torch.Tensor) -> torch.Tensor:
        return ContextModel.as_volume_features(
            self.hyper_decoder(z_hat), self.cfg.latent_channels)

    def reconstruct_from_latent(self, y_hat: torch.Tensor) -> torch.Tensor:
        return self.decoder(y_hat).clamp(*self.output_clamp)

    def forward(self, x: torch.Tensor, mode: str = "train",
                noise_seed: int | None = None) -> dict:
        """Training/estimation pass; returns reconstruction and rate."""
        y = self.encoder(x)
        y_hat = universal_quantize(y, mode, noise_seed,
                                   origin=f"{self.chunk_prefix}.main")
        z = self.hyper_encoder(y)
        z_hat = universal_quantize(
            z, mode, None if noise_seed is None else noise_seed + 1,
            origin=f"{self.chunk_prefix}.hyper")
        params = self.context(y_hat, self._hyper_volume(z_hat))
        bits_main = self.context.bits(y_hat, self._hyper_volume(z_hat))
        bits_hyper = self.hyper_prior.bits(z_hat)
        recon_raw = self.decoder(y_hat)
        return {
            "recon": recon_raw.clamp(*self.output_clamp),
            "recon_raw": recon_raw,
            "latent": y_hat,
            "params": params,
            "bits_main": bits_main,
            "bits_hyper": bits_hyper,
            "bits": bits_main + bits_hyper,
        }

    @torch.no_grad()
    def compress(self, x: torch.Tensor, record_tables: list | None = None):
        """Code one frame (batch of 1) into [hyper, main] chunks."""
        assert x.shape[0] == 1, "coding operates on single frames"
        y = self.encoder(x)
        y_hat = universal_quantize(y, "infer",
                                   origin=f"{self.chunk_prefix}.main")
        z_hat = universal_quantize(self.hyper_encoder(y), "infer",
                                   origin=f"{self.chunk_prefix}.hyper")

        z_range = symbol_range_of(z_hat)
        enc = RangeEncoder()
        self.hyper_prior.encode(enc, z_hat[0], z_range)
        hyper_chunk = Chunk(f"{self.chunk_prefix}_hyper", *z_range,
                            enc.finish())

        static = self._hyper_volume(z_hat)[0].double().numpy()
        y_range = symbol_range_of(y_hat)
        enc = RangeEncoder()
        SequentialCoder(self.context).encode(
            enc, y_hat[0].long().numpy(), static, y_range,
            record=record_tables)
        main_chunk = Chunk(f"{self.chunk_prefix}_main", *y_range,
                           enc.finish())

        return [hyper_chunk, main_chunk], self.reconstruct_from_latent(y_hat)

    @torch.no_grad()
    def decompress(self, chunks: list[Chunk], latent_hw: tuple[int, int],
                   record_tables: list | None = None) -> torch.Tensor:
        """Decode [hyper, main] chunks back to the reconstruction."""
        hyper_chunk, main_chunk = chunks
        lh, lw = latent_hw
        hh, hw = lh // 4, lw // 4

        dec = RangeDecoder(hyper_chunk.payload)
        z_hat = self.hyper_prior.decode(
            dec, (self.cfg.hyper_channels, hh, hw),
            (hyper_chunk.sym_min, hyper_chunk.sym_max)).unsqueeze(0)
        dec.verify()

        static = self._hyper_volume(z_hat)[0].double().numpy()
        dec = RangeDecoder(main_chunk.payload)
        latent = SequentialCoder(self.context).decode(
            dec, (self.cfg.latent_channels, lh, lw), static,
            (main_chunk.sym_min, main_chunk.sym_max), record=record_tables)
        dec.verify()

        y_hat = torch.from_numpy(latent).float().unsqueeze(0)
        return self.reconstruct_from_latent(y_hat)


class IntraCodec(SpatialHyperCodec):
    """I-frame codec: frames in [0, 1], three channels in and out."""

    chunk_prefix = "intra"
    output_clamp = (0.0, 1.0)
