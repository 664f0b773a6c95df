"""Bjontegaard deltas between rate-distortion curves.

Classic formulation: cubic polynomial fit in the log-rate domain,
integrated over the overlapping quality (or log-rate) interval.
``bd_rate`` reports the average rate difference in percent at equal
quality; ``bd_quality`` the average quality difference at equal rate.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["bd_rate", "bd_quality"]


def _split(points):
    pts = sorted((float(r), float(q)) for r, q in points)
    rates = np.array([p[0] for p in pts])
    quals = np.array([p[1] for p in pts])
    if len(pts) < 4:
        raise ValueError(f"need >= 4 RD points for a cubic fit, got {len(pts)}")
    if rates.min() <= 0:
        raise ValueError("rates must be positive")
    return np.log(rates), quals


def _overlap(x1, x2):
    lo = max(x1.min(), x2.min())
    hi = min(x1.max(), x2.max())
    if hi <= lo:
        raise ValueError("curves do not overlap; BD delta undefined")
    return lo, hi


def _avg_poly_diff(x1, y1, x2, y2):
    """Mean difference of cubic fits y(x) over the overlapping x range."""
    lo, hi = _overlap(x1, x2)
    p1 = np.polyfit(x1, y1, 3)
    p2 = np.polyfit(x2, y2, 3)
    int1 = np.polyval(np.polyint(p1), hi) - np.polyval(np.polyint(p1), lo)
    int2 = np.polyval(np.polyint(p2), hi) - np.polyval(np.polyint(p2), lo)
    return (int2 - int1) / (hi - lo)


def bd_rate(anchor, test) -> float:
    """Average percent rate difference of ``test`` against ``anchor``.

    Negative means the test codec spends fewer bits at equal quality.
    """
    log_r1, q1 = _split(anchor)
    log_r2, q2 = _split(test)
    avg_exp_diff = _avg_poly_diff(q1, log_r1, q2, log_r2)
    # Guard the exponent against pathological fits on malformed curves.
    return (math.exp(min(avg_exp_diff, 200.0)) - 1.0) * 100.0


def bd_quality(anchor, test) -> float:
    """Average quality difference of ``test`` against ``anchor``.

    Positive means the test codec is better at equal rate.
    """
    log_r1, q1 = _split(anchor)
    log_r2, q2 = _split(test)
    return float(_avg_poly_diff(log_r1, q1, log_r2, q2))
