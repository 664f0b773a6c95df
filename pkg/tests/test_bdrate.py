import numpy as np
import pytest

from nvc.bdrate import bd_quality, bd_rate

ANCHOR = [(0.12, 30.1), (0.25, 33.4), (0.52, 36.2), (0.95, 38.3)]


def test_self_comparison_is_zero():
    assert bd_rate(ANCHOR, ANCHOR) == pytest.approx(0.0, abs=1e-10)
    assert bd_quality(ANCHOR, ANCHOR) == pytest.approx(0.0, abs=1e-10)


def test_uniform_rate_scaling_exact():
    # Scaling every rate by 0.9 at unchanged quality shifts log-rate by a
    # constant: BD-rate is exactly -10%.
    test = [(r * 0.9, q) for r, q in ANCHOR]
    assert bd_rate(ANCHOR, test) == pytest.approx(-10.0, abs=0.01)


def test_uniform_quality_shift():
    test = [(r, q + 1.0) for r, q in ANCHOR]
    assert bd_quality(ANCHOR, test) == pytest.approx(1.0, abs=1e-9)


def test_sign_convention():
    better = [(r * 0.7, q) for r, q in ANCHOR]
    worse = [(r * 1.3, q) for r, q in ANCHOR]
    assert bd_rate(ANCHOR, better) < 0 < bd_rate(ANCHOR, worse)


def test_antisymmetry_of_uniform_scaling():
    # Scaling by k one way and 1/k the other gives mirrored percentages.
    test = [(r * 0.8, q) for r, q in ANCHOR]
    down = bd_rate(ANCHOR, test)
    up = bd_rate(test, ANCHOR)
    assert down == pytest.approx(-20.0, abs=0.01)
    assert up == pytest.approx(25.0, abs=0.01)  # 1/0.8 - 1


def test_trapezoid_integration_oracle():
    # Same cubic fits, but integrated numerically on a 10^4-point grid;
    # the closed-form path must agree to 0.05 percentage points.
    test = [(0.10, 30.9), (0.22, 34.0), (0.45, 36.6), (0.88, 38.9)]

    def oracle(anchor_pts, test_pts):
        r1 = np.log([p[0] for p in anchor_pts])
        q1 = np.array([p[1] for p in anchor_pts])
        r2 = np.log([p[0] for p in test_pts])
        q2 = np.array([p[1] for p in test_pts])
        p1 = np.polyfit(q1, r1, 3)
        p2 = np.polyfit(q2, r2, 3)
        lo = max(q1.min(), q2.min())
        hi = min(q1.max(), q2.max())
        grid = np.linspace(lo, hi, 10_000)
        avg = np.trapezoid(np.polyval(p2, grid) - np.polyval(p1, grid),
                           grid) / (hi - lo)
        return (np.exp(avg) - 1.0) * 100.0

    got = bd_rate(ANCHOR, test)
    want = oracle(ANCHOR, test)
    assert got == pytest.approx(want, abs=0.05)


def test_non_overlapping_ranges_rejected():
    low = [(0.1, 20.0), (0.2, 22.0), (0.3, 24.0), (0.4, 26.0)]
    high = [(0.1, 30.0), (0.2, 32.0), (0.3, 34.0), (0.4, 36.0)]
    with pytest.raises(ValueError, match="overlap"):
        bd_rate(low, high)


def test_too_few_points_rejected():
    with pytest.raises(ValueError, match="4 RD points"):
        bd_rate(ANCHOR[:3], ANCHOR)


def test_nonpositive_rates_rejected():
    bad = [(0.0, 30.0)] + ANCHOR[1:]
    with pytest.raises(ValueError):
        bd_rate(bad, ANCHOR)
