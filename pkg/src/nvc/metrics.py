"""Quality metrics: PSNR and multiscale SSIM.

MS-SSIM follows the standard 5-scale construction: 11x11 Gaussian window
(sigma 1.5), K1=0.01, K2=0.03, per-scale exponents (0.0448, 0.2856,
0.3001, 0.2363, 0.1333), dyadic downsampling by 2x2 average pooling.
For frames too small for five scales the deepest usable scale count is
used and the exponents are renormalized to sum to one.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F

from .errors import ShapeMismatchError

__all__ = ["psnr", "ms_ssim", "PSNR_CAP"]

PSNR_CAP = 100.0

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
_WIN_SIZE = 11
_WIN_SIGMA = 1.5
_K1, _K2 = 0.01, 0.03


def psnr(a: torch.Tensor, b: torch.Tensor, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB, capped at 100 for identical inputs."""
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"psnr inputs {tuple(a.shape)} vs {tuple(b.shape)}")
    mse = float(((a.double() - b.double()) ** 2).mean())
    if mse == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(peak * peak / mse))


def _gaussian_window(dtype, device) -> torch.Tensor:
    coords = torch.arange(_WIN_SIZE, dtype=dtype, device=device)
    coords -= (_WIN_SIZE - 1) / 2.0
    g = torch.exp(-(coords ** 2) / (2 * _WIN_SIGMA ** 2))
    g /= g.sum()
    return g[None, None]


def _blur(x: torch.Tensor, win: torch.Tensor) -> torch.Tensor:
    c = x.shape[1]
    x = F.conv2d(x, win[..., None, :].expand(c, 1, 1, _WIN_SIZE), groups=c)
    return F.conv2d(x, win[..., :, None].expand(c, 1, _WIN_SIZE, 1), groups=c)


def _ssim_pair(a: torch.Tensor, b: torch.Tensor, win: torch.Tensor,
               peak: float):
    c1 = (_K1 * peak) ** 2
    c2 = (_K2 * peak) ** 2
    mu_a = _blur(a, win)
    mu_b = _blur(b, win)
    var_a = _blur(a * a, win) - mu_a ** 2
    var_b = _blur(b * b, win) - mu_b ** 2
    cov = _blur(a * b, win) - mu_a * mu_b
    luminance = (2 * mu_a * mu_b + c1) / (mu_a ** 2 + mu_b ** 2 + c1)
    contrast = (2 * cov + c2) / (var_a + var_b + c2)
    return luminance.mean(), contrast.mean()


def ms_ssim(a: torch.Tensor, b: torch.Tensor, peak: float = 1.0,
            levels: int | None = None) -> torch.Tensor:
    """Multiscale SSIM over (B, C, H, W) tensors; differentiable."""
    if a.dim() == 3:
        a, b = a.unsqueeze(0), b.unsqueeze(0)
    if a.shape != b.shape:
        raise ShapeMismatchError(
            f"ms_ssim inputs {tuple(a.shape)} vs {tuple(b.shape)}")
    min_dim = min(a.shape[-2:])
    if min_dim < _WIN_SIZE:
        raise ValueError(f"frame too small for an {_WIN_SIZE}px window")
    max_levels = min(len(MSSSIM_WEIGHTS),
                     int(math.log2(min_dim / _WIN_SIZE)) + 1)
    levels = max_levels if levels is None else min(levels, max_levels)

    weights = torch.tensor(MSSSIM_WEIGHTS[:levels], dtype=a.dtype,
                           device=a.device)
    weights = weights / weights.sum()
    win = _gaussian_window(a.dtype, a.device)

    factors = []
    for level in range(levels):
        luminance, contrast = _ssim_pair(a, b, win, peak)
        factors.append(contrast if level < levels - 1 else
                       luminance * contrast)
        if level < levels - 1:
            a = F.avg_pool2d(a, 2)
            b = F.avg_pool2d(b, 2)
    stacked = torch.stack(factors).clamp(min=1e-8)
    return torch.prod(stacked ** weights)
