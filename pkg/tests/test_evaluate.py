import pytest
import torch

from nvc.evaluate import (RDCurve, bd_summary, evaluate_sequence,
                          plot_curves, read_curve_csv, run_ablation,
                          write_curve_csv, write_rd_report)
from nvc.pipeline import CodecConfig

CURVE_A = RDCurve([(0.12, 30.1), (0.25, 33.4), (0.52, 36.2), (0.95, 38.3)],
                  metric="psnr", tag="anchor")
CURVE_B = RDCurve([(0.10, 30.9), (0.22, 34.0), (0.45, 36.6), (0.88, 38.9)],
                  metric="psnr", tag="test")


def test_curve_validation():
    CURVE_A.require_bd_ready()
    with pytest.raises(ValueError, match="at least 4"):
        RDCurve(CURVE_A.points[:2]).require_bd_ready()
    dup = RDCurve([(0.1, 30.0), (0.1, 31.0), (0.2, 32.0), (0.3, 33.0)])
    with pytest.raises(ValueError, match="strictly increasing"):
        dup.sorted_points()


def test_csv_round_trip(tmp_path):
    path = tmp_path / "curve.csv"
    write_curve_csv(CURVE_A, path)
    back = read_curve_csv(path)
    assert back.metric == "psnr"
    assert back.tag == "anchor"
    assert [(round(r, 6), round(q, 6)) for r, q in sorted(back.points)] == \
        [(round(r, 6), round(q, 6)) for r, q in sorted(CURVE_A.points)]


def test_bd_summary_fields():
    summary = bd_summary(CURVE_A, CURVE_B)
    assert summary["anchor"] == "anchor" and summary["test"] == "test"
    assert summary["bd_rate_percent"] < 0  # B is the better curve
    assert summary["bd_quality"] > 0


def test_evaluate_sequence_round_trip(tiny_models):
    frames = torch.rand(3, 3, 64, 64)
    point, stream = evaluate_sequence(frames, tiny_models,
                                      CodecConfig(gop_size=3))
    assert point.bpp > 0
    assert len(point.frame_psnr) == 3


def test_run_ablation_mechanics(tiny_models):
    # Build a fake ladder whose rungs produce distinct rates by scaling
    # the intra analysis weights; identical ladders on both sides must
    # come out at exactly 0% BD-rate.
    import copy
    clips = [torch.rand(2, 3, 64, 64)]
    ladder = []
    for i, lam in enumerate((64.0, 128.0, 256.0, 512.0)):
        rung = copy.deepcopy(tiny_models)
        with torch.no_grad():
            for p in rung.intra.encoder.parameters():
                p.mul_(1.0 + 0.35 * i)
        ladder.append((lam, rung.eval()))
    out = run_ablation(ladder, ladder, clips, gop_size=2,
                       tags=("base", "variant"))
    assert out["base"].points == out["variant"].points
    assert out["bd"]["bd_rate_percent"] == pytest.approx(0.0, abs=1e-9)


def test_write_rd_report(tmp_path, tiny_models):
    frames = torch.rand(2, 3, 64, 64)
    point, _ = evaluate_sequence(frames, tiny_models, CodecConfig(gop_size=2))
    csv_path, json_path = write_rd_report(point, tmp_path / "report", "tag")
    assert csv_path.exists() and json_path.exists()
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "frame,bpp,psnr,ms_ssim"
    assert lines[-1].startswith("average,")


def test_plot_curves(tmp_path):
    out = plot_curves([CURVE_A, CURVE_B], tmp_path / "rd.png", title="toy")
    assert out.exists() and out.stat().st_size > 0
