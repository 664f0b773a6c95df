"""Gaussian probability modeling of quantized latents.

Each latent element is modeled as a Gaussian with its own (mu, sigma);
the probability of an integer symbol is the CDF mass of the unit bin
around it. The same model drives three consumers: the differentiable
bit estimate used as the training rate term, the frozen fixed-point
frequency tables fed to the range coder, and diagnostic per-element
probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from scipy.special import ndtr

from ..errors import ShapeMismatchError

__all__ = [
    "SIGMA_MIN", "PMF_TOTAL_BITS", "PMF_TOTAL", "P_MIN",
    "GaussianParams", "PmfTable",
    "gaussian_pmf", "estimate_bits", "build_pmf_table", "build_cum_matrix",
]

SIGMA_MIN = 0.01
PMF_TOTAL_BITS = 16
PMF_TOTAL = 1 << PMF_TOTAL_BITS
# Floor on modeled probabilities; matches the 1-count clamp of the
# fixed-point tables so estimated and actual code lengths stay aligned.
P_MIN = 2.0 ** -PMF_TOTAL_BITS

_LOG2 = float(np.log(2.0))


@dataclass
class GaussianParams:
    """Per-element (mu, sigma) of the latent probability model."""

    mu: torch.Tensor
    sigma: torch.Tensor

    def __post_init__(self):
        if self.mu.shape != self.sigma.shape:
            raise ShapeMismatchError(
                f"mu shape {tuple(self.mu.shape)} != sigma shape "
                f"{tuple(self.sigma.shape)}")
        smin = float(self.sigma.detach().min())
        if smin < SIGMA_MIN - 1e-9:
            raise ValueError(
                f"sigma below lower bound {SIGMA_MIN}: min={smin:.3g}")


def gaussian_pmf(symbol: torch.Tensor, mu: torch.Tensor,
                 sigma: torch.Tensor) -> torch.Tensor:
    """Probability mass of the unit bin centered on ``symbol``.

    ``Phi((s - mu + 1/2)/sigma) - Phi((s - mu - 1/2)/sigma)``, floored at
    ``P_MIN`` to keep code lengths finite. Differentiable in mu and sigma.
    """
    centered = symbol - mu
    upper = torch.special.ndtr((centered + 0.5) / sigma)
    lower = torch.special.ndtr((centered - 0.5) / sigma)
    return torch.clamp(upper - lower, min=P_MIN)


def estimate_bits(latent: torch.Tensor, params: GaussianParams) -> torch.Tensor:
    """Total information content of ``latent`` under ``params``, in bits.

    Differentiable with respect to the model parameters and, through the
    quantizer's straight-through estimator, the latent itself.
    """
    if latent.shape != params.mu.shape:
        raise ShapeMismatchError(
            f"latent shape {tuple(latent.shape)} != params shape "
            f"{tuple(params.mu.shape)}")
    p = gaussian_pmf(latent, params.mu, params.sigma)
    return -torch.log(p).sum() / _LOG2


@dataclass
class PmfTable:
    """Fixed-point frequency table for one coded symbol.

    ``freqs[k]`` is the frequency of symbol ``sym_min + k``; frequencies
    are all >= 1 and sum exactly to ``total`` (a power of two).
    """

    sym_min: int
    sym_max: int
    freqs: np.ndarray
    total: int = PMF_TOTAL
    cum: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.sym_max < self.sym_min:
            raise ValueError("empty symbol range")
        n = self.sym_max - self.sym_min + 1
        if self.freqs.shape != (n,):
            raise ShapeMismatchError(
                f"{n} symbols but {self.freqs.shape[0]} frequencies")
        if int(self.freqs.min()) < 1:
            raise ValueError("zero-frequency symbol in table")
        if int(self.freqs.sum()) != self.total:
            raise ValueError("frequencies do not sum to total")
        self.cum = np.zeros(n + 1, dtype=np.uint32)
        np.cumsum(self.freqs, out=self.cum[1:])


def build_cum_matrix(mu: np.ndarray, sigma: np.ndarray,
                     symbol_range: tuple[int, int],
                     total: int = PMF_TOTAL) -> np.ndarray:
    """Cumulative frequency tables for a batch of Gaussian models.

    Returns a ``(N, K + 1)`` uint32 array where row ``i`` is the coder-ready
    cumulative table of element ``i`` over symbols ``sym_min .. sym_max``
    (``K`` symbols, row ends at ``total`` exactly, every symbol has
    frequency >= 1).

    Determinism rule: the Gaussian CDF is evaluated in IEEE-754 float64 at
    the bin boundaries, renormalized over the table range, scaled by
    ``total``, and rounded half-up to integers; the monotone fixed-point
    CDF is then differenced and zero frequencies are lifted to 1 with the
    deficit taken from the largest frequency (first occurrence). Encoder
    and decoder must run this exact procedure to stay synchronized.
    """
    sym_min, sym_max = int(symbol_range[0]), int(symbol_range[1])
    if sym_max < sym_min:
        raise ValueError("empty symbol range")
    n_sym = sym_max - sym_min + 1
    if n_sym * 2 > total:
        raise ValueError(
            f"symbol range of {n_sym} too wide for table total {total}")

    mu = np.asarray(mu, dtype=np.float64).reshape(-1)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(-1)
    if mu.shape != sigma.shape:
        raise ShapeMismatchError("mu/sigma length mismatch")
    n = mu.shape[0]

    # CDF at bin boundaries sym_min-1/2 .. sym_max+1/2, shape (N, K+1).
    bounds = sym_min - 0.5 + np.arange(n_sym + 1, dtype=np.float64)
    z = (bounds[None, :] - mu[:, None]) / sigma[:, None]
    cdf = ndtr(z)

    lo = cdf[:, :1]
    span = cdf[:, -1:] - lo
    ok = span > 0.0
    # Degenerate rows (all mass outside the range) fall back to uniform.
    frac = np.where(ok, (cdf - lo) / np.where(ok, span, 1.0),
                    np.linspace(0.0, 1.0, n_sym + 1)[None, :])

    fixed = np.floor(frac * total + 0.5).astype(np.int64)
    fixed[:, 0] = 0
    fixed[:, -1] = total
    np.maximum.accumulate(fixed, axis=1, out=fixed)

    freqs = np.diff(fixed, axis=1)
    np.maximum(freqs, 1, out=freqs)
    deficit = freqs.sum(axis=1) - total
    rows = np.nonzero(deficit > 0)[0]
    if rows.size:
        top = np.argmax(freqs[rows], axis=1)
        freqs[rows, top] -= deficit[rows]
        # If the largest frequency could not absorb the whole deficit
        # (possible only for extremely wide, flat tables), walk it off.
        for r in rows[freqs[rows, top] < 1]:
            freqs[r, np.argmax(freqs[r])] += deficit[r]  # undo
            left = int(deficit[r])
            while left > 0:
                j = int(np.argmax(freqs[r]))
                take = min(left, int(freqs[r, j]) - 1)
                freqs[r, j] -= take
                left -= take

    out = np.zeros((n, n_sym + 1), dtype=np.uint32)
    np.cumsum(freqs, axis=1, out=out[:, 1:])
    return out


def build_pmf_table(mu: float, sigma: float,
                    symbol_range: tuple[int, int],
                    total: int = PMF_TOTAL) -> PmfTable:
    """Frequency table for a single Gaussian model over ``symbol_range``."""
    cum = build_cum_matrix(np.array([mu]), np.array([sigma]),
                           symbol_range, total)
    freqs = np.diff(cum[0]).astype(np.uint32)
    return PmfTable(int(symbol_range[0]), int(symbol_range[1]), freqs, total)
