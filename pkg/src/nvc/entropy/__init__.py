"""Shared compression substrate: quantization, Gaussian modeling, coding."""

from .coder import (BACKEND, RangeDecoder, RangeEncoder, range_decode,
                    range_encode)
from .gaussian import (P_MIN, PMF_TOTAL, PMF_TOTAL_BITS, SIGMA_MIN,
                       GaussianParams, PmfTable, build_cum_matrix,
                       build_pmf_table, estimate_bits, gaussian_pmf)
from .quantize import round_half_away, universal_quantize

__all__ = [
    "BACKEND", "RangeEncoder", "RangeDecoder", "range_encode", "range_decode",
    "P_MIN", "PMF_TOTAL", "PMF_TOTAL_BITS", "SIGMA_MIN",
    "GaussianParams", "PmfTable", "build_cum_matrix", "build_pmf_table",
    "estimate_bits", "gaussian_pmf",
    "round_half_away", "universal_quantize",
]
