"""RD-curve evaluation: sequence runners, curve containers, ablation
switches, and table emission (CSV / JSON, optional plots)."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import torch

from .bdrate import bd_quality, bd_rate
from .models import NvcModels
from .pipeline import (CodecConfig, RDPoint, decode_sequence, encode_sequence,
                       rd_point)

__all__ = ["RDCurve", "evaluate_sequence", "rd_curve_for_ladder",
           "run_ablation", "write_curve_csv", "read_curve_csv",
           "bd_summary", "plot_curves"]


@dataclass
class RDCurve:
    """Rate-quality points for one codec configuration."""

    points: list[tuple[float, float]]  # (bpp, quality), any order
    metric: str = "psnr"
    tag: str = ""

    def sorted_points(self) -> list[tuple[float, float]]:
        pts = sorted(self.points)
        rates = [p[0] for p in pts]
        if any(b >= a for a, b in zip(rates[1:], rates)):
            raise ValueError(f"curve {self.tag!r}: bpp values must be "
                             "strictly increasing after sort")
        return pts

    def require_bd_ready(self) -> None:
        if len(self.points) < 4:
            raise ValueError(
                f"curve {self.tag!r} has {len(self.points)} points; "
                "BD deltas need at least 4")
        self.sorted_points()


def evaluate_sequence(frames: torch.Tensor, models: NvcModels,
                      config: CodecConfig) -> tuple[RDPoint, bytes]:
    """Encode + decode one sequence and measure rate/quality."""
    stream = encode_sequence(frames, models, config)
    recon = decode_sequence(stream, models)
    return rd_point(frames, stream, recon), stream


def rd_curve_for_ladder(ladder: list[tuple[float, NvcModels]],
                        clips: list[torch.Tensor], gop_size: int,
                        metric: str = "psnr", tag: str = "") -> RDCurve:
    """Average RD over ``clips`` for each (lambda, models) rung."""
    points = []
    for lam, models in ladder:
        config = CodecConfig(lambda_intra=lam, gop_size=gop_size)
        bpps, quals = [], []
        for clip in clips:
            point, _ = evaluate_sequence(clip, models, config)
            bpps.append(point.bpp)
            quals.append(point.psnr if metric == "psnr" else point.ms_ssim)
        points.append((sum(bpps) / len(bpps), sum(quals) / len(quals)))
    return RDCurve(points, metric=metric, tag=tag)


def bd_summary(anchor: RDCurve, test: RDCurve) -> dict:
    anchor.require_bd_ready()
    test.require_bd_ready()
    return {
        "anchor": anchor.tag,
        "test": test.tag,
        "metric": anchor.metric,
        "bd_rate_percent": bd_rate(anchor.sorted_points(),
                                   test.sorted_points()),
        "bd_quality": bd_quality(anchor.sorted_points(),
                                 test.sorted_points()),
    }


def run_ablation(base_ladder: list[tuple[float, NvcModels]],
                 variant_ladder: list[tuple[float, NvcModels]],
                 clips: list[torch.Tensor], gop_size: int,
                 metric: str = "psnr",
                 tags: tuple[str, str] = ("base", "variant")) -> dict:
    """Paired curves for a configuration toggle plus the BD summary."""
    base = rd_curve_for_ladder(base_ladder, clips, gop_size, metric, tags[0])
    variant = rd_curve_for_ladder(variant_ladder, clips, gop_size, metric,
                                  tags[1])
    return {"base": base, "variant": variant,
            "bd": bd_summary(base, variant)}


def write_curve_csv(curve: RDCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bpp", curve.metric, "tag"])
        for bpp, q in sorted(curve.points):
            writer.writerow([f"{bpp:.8f}", f"{q:.8f}", curve.tag])


def read_curve_csv(path: str | Path) -> RDCurve:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2:
        raise ValueError(f"{path}: expected columns bpp,<metric>[,tag]")
    metric = rows[0][1]
    points = []
    tag = ""
    for row in rows[1:]:
        if not row:
            continue
        points.append((float(row[0]), float(row[1])))
        if len(row) > 2:
            tag = row[2]
    return RDCurve(points, metric=metric, tag=tag or Path(path).stem)


def write_rd_report(point: RDPoint, path_prefix: str | Path,
                    tag: str = "") -> tuple[Path, Path]:
    """Emit one sequence's RD result as CSV + JSON."""
    prefix = Path(path_prefix)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "bpp", "psnr", "ms_ssim"])
        for i, (b, p, m) in enumerate(zip(point.frame_bpp, point.frame_psnr,
                                          point.frame_ms_ssim)):
            writer.writerow([i, f"{b:.8f}", f"{p:.6f}", f"{m:.8f}"])
        writer.writerow(["average", f"{point.bpp:.8f}",
                         f"{point.psnr:.6f}", f"{point.ms_ssim:.8f}"])
    payload = {"tag": tag, **point.as_dict()}
    json_path.write_text(json.dumps(payload, indent=2))
    return csv_path, json_path


def plot_curves(curves: list[RDCurve], path: str | Path,
                title: str = "") -> Path:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for curve in curves:
        pts = sorted(curve.points)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=curve.tag or curve.metric)
    ax.set_xlabel("bits per pixel")
    ax.set_ylabel(curves[0].metric if curves else "quality")
    ax.grid(True, alpha=0.4)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
