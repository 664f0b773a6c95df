"""Dithered quantization with a straight-through gradient.

Training uses a single shared uniform offset per tensor per call: the
features are shifted by ``u``, rounded, and shifted back, which keeps the
quantization error distribution matched between training and inference.
Inference rounds directly (``u = 0``). Rounding is half-away-from-zero,
fixed globally so encoder and decoder agree on ties.
"""

from __future__ import annotations

import torch

from ..errors import NonFiniteInputError

__all__ = ["round_half_away", "dithered_round", "universal_quantize"]


def round_half_away(x: torch.Tensor) -> torch.Tensor:
    """Round to nearest integer with ties going away from zero.

    ``torch.round`` rounds half to even, which would make tie handling
    depend on the neighbouring integer's parity; the codec needs one rule.
    """
    return torch.sign(x) * torch.floor(torch.abs(x) + 0.5)


def dithered_round(x: torch.Tensor, u: float | torch.Tensor) -> torch.Tensor:
    """``R(x + u) - u``: round on a grid shifted by the shared offset."""
    return round_half_away(x + u) - u


def universal_quantize(
    x: torch.Tensor,
    mode: str = "infer",
    noise_seed: int | None = None,
    origin: str = "",
) -> torch.Tensor:
    """Quantize ``x`` for entropy coding.

    In ``train`` mode returns ``R(x + u) - u`` where ``u`` is one uniform
    draw from (-1/2, 1/2) shared by every element of the tensor (seeded by
    ``noise_seed`` when given). In ``infer`` mode returns ``R(x)``. Both
    modes report a derivative of 1 so gradients pass straight through the
    rounding.

    ``origin`` names the producing layer in error diagnostics.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown quantization mode {mode!r}")
    if not torch.isfinite(x).all():
        where = f" from {origin}" if origin else ""
        raise NonFiniteInputError(
            f"non-finite values in tensor{where}; refusing to quantize")

    if mode == "infer":
        hard = round_half_away(x)
    else:
        if noise_seed is not None:
            gen = torch.Generator(device="cpu")
            gen.manual_seed(noise_seed)
            u = torch.rand((), generator=gen, dtype=x.dtype)
        else:
            u = torch.rand((), dtype=x.dtype)
        u = (u - 0.5).to(x.device)
        hard = dithered_round(x, u)

    # Straight-through: forward value is the quantized one, gradient is 1.
    return x + (hard - x).detach()
