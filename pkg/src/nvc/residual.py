"""Residual compressor and final reconstruction.

The prediction residual ``r = X - X_pred`` lives in [-1, 1]; it is coded
with the same VAE/context machinery as the intra compressor (spatial +
hyper priors, no temporal inference) under independent weights. The final
frame is the clamped sum of prediction and decoded residual; clamping on
both sides before the frame is used as the next reference is what
prevents encoder/decoder drift through out-of-range values.
"""

from __future__ import annotations

import torch

from .backbone import VaeConfig
from .intra import SpatialHyperCodec

__all__ = ["ResidualCodec", "reconstruct"]


class ResidualCodec(SpatialHyperCodec):
    """Residual codec: inputs in [-1, 1], chunk kinds ``res_*``."""

    chunk_prefix = "res"
    output_clamp = (-1.0, 1.0)

    def __init__(self, cfg: VaeConfig | None = None, ctx_features: int = 12,
                 fusion_width: int = 32):
        super().__init__(cfg or VaeConfig(), ctx_features, fusion_width)


def reconstruct(prediction: torch.Tensor,
                residual: torch.Tensor) -> torch.Tensor:
    """Final frame: prediction plus decoded residual, clamped to [0, 1]."""
    return (prediction + residual).clamp(0.0, 1.0)
