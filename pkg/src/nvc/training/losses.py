"""Training objectives.

The motion stages minimize a multiscale L1 prediction loss with
scale-dependent weights 4^s (coarse scales weighted up so the low-rate
flows learn large displacements first); rate-constrained stages add the
estimated bits-per-pixel. Target pyramids come from stride-2 average
pooling of the full-resolution frames.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F

from ..errors import ShapeMismatchError

__all__ = ["pool_pyramid", "multiscale_prediction_loss", "rd_loss",
           "scale_weight"]

NUM_SCALES = 5


def scale_weight(s: int) -> float:
    return float(4 ** s)


def pool_pyramid(x: torch.Tensor, scales: int = NUM_SCALES) -> list[torch.Tensor]:
    """Dyadic pyramid of ``x`` by stride-2 average pooling; scale 0 = x."""
    out = [x]
    for _ in range(scales - 1):
        out.append(F.avg_pool2d(out[-1], 2))
    return out


def multiscale_prediction_loss(pred_pyramid: list[torch.Tensor],
                               target_pyramid: list[torch.Tensor]
                               ) -> torch.Tensor:
    """Sum over scales of 4^s * mean-L1 between prediction and target."""
    if len(pred_pyramid) != len(target_pyramid):
        raise ShapeMismatchError(
            f"{len(pred_pyramid)} prediction scales vs "
            f"{len(target_pyramid)} targets")
    loss = None
    for s, (pred, target) in enumerate(zip(pred_pyramid, target_pyramid)):
        if pred.shape != target.shape:
            raise ShapeMismatchError(
                f"scale {s}: {tuple(pred.shape)} vs {tuple(target.shape)}")
        term = scale_weight(s) * (pred - target).abs().mean()
        loss = term if loss is None else loss + term
    return loss


def rd_loss(distortion: torch.Tensor | float, bits: torch.Tensor | float,
            lam: float, pixels: int) -> torch.Tensor:
    """Lagrangian cost J = R + lambda * D with R in bits per pixel."""
    if pixels <= 0:
        raise ValueError("pixel count must be positive")
    bpp = bits / pixels
    out = bpp + lam * distortion
    return out if isinstance(out, torch.Tensor) else torch.tensor(out)
