"""Command-line interface: encode / decode / eval / bdrate / train."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

import numpy as np
import torch

from . import __version__
from .bitstream import read_stream, write_stream
from .errors import NvcError
from .evaluate import (bd_summary, plot_curves, read_curve_csv,
                       write_rd_report)
from .frames import load_frames, save_png_dir
from .models import (ModelConfig, build_models, load_checkpoint,
                     save_checkpoint)
from .motion import flow_to_color
from .pipeline import (CodecConfig, decode_sequence, encode_sequence,
                       rd_point)
from .training import STAGES, TrainConfig, run_stage


def _parse_size(text: str | None):
    if text is None:
        return None
    w, h = text.lower().split("x")
    return int(w), int(h)


def _load_toml(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _codec_config(args, toml_cfg: dict) -> CodecConfig:
    codec = dict(toml_cfg.get("codec", {}))
    ladder = codec.pop("lambda_ladder", None)
    if args.lambda_index is not None:
        codec["lambda_index"] = args.lambda_index
        if ladder:
            codec["lambda_intra"] = float(ladder[args.lambda_index])
    if getattr(args, "gop", None) is not None:
        codec["gop_size"] = args.gop
    if getattr(args, "intra_only", False):
        codec["intra_only"] = True
    return CodecConfig(**codec)


def _load_models(args, toml_cfg: dict):
    if args.model:
        models, _ = load_checkpoint(args.model)
        return models
    model_cfg = toml_cfg.get("model")
    if model_cfg is None:
        raise SystemExit("need --model <ckpt> or a [model] config table")
    return build_models(ModelConfig(**model_cfg))


def _dump_flows(directory: str):
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)

    def hook(frame_index: int, flows):
        from PIL import Image
        for s, flow in enumerate(flows):
            arr = flow[0].detach().cpu().numpy()
            np.save(out / f"frame{frame_index:05d}_scale{s}.npy", arr)
            Image.fromarray(flow_to_color(flow[0])).save(
                out / f"frame{frame_index:05d}_scale{s}.png")

    return hook


def cmd_encode(args) -> int:
    toml_cfg = _load_toml(args.config)
    models = _load_models(args, toml_cfg)
    config = _codec_config(args, toml_cfg)
    frames = load_frames(args.input, _parse_size(args.size), args.pixfmt,
                         args.frames)
    hook = _dump_flows(args.dump_flows) if args.dump_flows else None
    stream = encode_sequence(frames, models, config, flow_hook=hook)
    data = write_stream(stream.header, stream.frames)
    Path(args.output).write_bytes(data)
    bpp = stream.bits_per_pixel()
    print(f"wrote {args.output}: {len(data)} bytes, "
          f"{stream.header.frame_count} frames, {bpp:.4f} bpp")
    return 0


def cmd_decode(args) -> int:
    toml_cfg = _load_toml(args.config)
    models = _load_models(args, toml_cfg)
    data = Path(args.input).read_bytes()
    frames = decode_sequence(data, models)
    written = save_png_dir(frames, args.output)
    print(f"decoded {len(written)} frames into {args.output}")
    return 0


def cmd_eval(args) -> int:
    toml_cfg = _load_toml(args.config)
    models = _load_models(args, toml_cfg)
    src_path, nvc_path = args.pair
    stream = read_stream(Path(nvc_path).read_bytes())
    frames = load_frames(src_path, _parse_size(args.size), args.pixfmt,
                         stream.header.frame_count)
    recon = decode_sequence(stream, models)
    point = rd_point(frames[: recon.shape[0]], stream, recon)
    print(f"bpp {point.bpp:.4f}  psnr {point.psnr:.3f} dB  "
          f"ms-ssim {point.ms_ssim:.5f}")
    if args.output:
        csv_path, json_path = write_rd_report(point, args.output,
                                              tag=str(nvc_path))
        print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_bdrate(args) -> int:
    anchor = read_curve_csv(args.anchor)
    test = read_curve_csv(args.test)
    summary = bd_summary(anchor, test)
    print(f"anchor: {summary['anchor']} ({anchor.metric}, "
          f"{len(anchor.points)} points)")
    print(f"test:   {summary['test']} ({test.metric}, "
          f"{len(test.points)} points)")
    print(f"BDBR   {summary['bd_rate_percent']:+.2f}%")
    print(f"BD-(D) {summary['bd_quality']:+.4f}")
    if args.plot:
        plot_curves([anchor, test], args.plot)
        print(f"wrote {args.plot}")
    return 0


def cmd_train(args) -> int:
    toml_cfg = _load_toml(args.config)
    train_cfg = dict(toml_cfg.get("train", {}))
    train_cfg["stage"] = args.stage
    if args.steps is not None:
        train_cfg["steps"] = args.steps
    if args.seed is not None:
        train_cfg["seed"] = args.seed
    config = TrainConfig(**train_cfg)

    stages_done: list[str] = []
    if args.ckpt and Path(args.ckpt).exists():
        models, extra = load_checkpoint(args.ckpt)
        stages_done = list(extra.get("stages_done", []))
    else:
        models = _load_models(args, toml_cfg)

    log_fh = open(args.log, "a") if args.log else sys.stdout

    def emit(entry: dict) -> None:
        log_fh.write(json.dumps(entry) + "\n")
        log_fh.flush()

    torch.manual_seed(config.seed)
    logs, _ = run_stage(models, config, stages_done=stages_done, log_cb=emit)
    if args.log:
        log_fh.close()

    if args.stage not in stages_done:
        stages_done.append(args.stage)
    out = args.out or args.ckpt
    if out:
        save_checkpoint(models, out, extra={"stages_done": stages_done})
        print(f"saved checkpoint {out} (stages done: {stages_done})")
    print(f"stage {args.stage}: {len(logs)} steps, "
          f"final loss {logs[-1]['loss']:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nvc", description="learned video codec")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common_model = argparse.ArgumentParser(add_help=False)
    common_model.add_argument("--model", help="model checkpoint (.pt)")
    common_model.add_argument("--config", help="TOML configuration")

    enc = sub.add_parser("encode", parents=[common_model],
                         help="encode frames into a .nvc stream")
    enc.add_argument("input", help="PNG directory or raw .yuv file")
    enc.add_argument("-o", "--output", required=True)
    enc.add_argument("--lambda-index", type=int, default=None)
    enc.add_argument("--gop", type=int, default=None)
    enc.add_argument("--intra-only", action="store_true")
    enc.add_argument("--frames", type=int, default=None,
                     help="limit the number of coded frames")
    enc.add_argument("--size", help="WxH for raw YUV input")
    enc.add_argument("--pixfmt", default="auto", help="e.g. yuv420p")
    enc.add_argument("--dump-flows", metavar="DIR",
                     help="write decoded flow pyramids for inspection")
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", parents=[common_model],
                         help="decode a .nvc stream to PNG frames")
    dec.add_argument("input")
    dec.add_argument("-o", "--output", required=True)
    dec.set_defaults(func=cmd_decode)

    ev = sub.add_parser("eval", parents=[common_model],
                        help="rate/quality of a coded stream vs its source")
    ev.add_argument("--pair", nargs=2, metavar=("SRC", "NVC"), required=True)
    ev.add_argument("-o", "--output", help="report path prefix")
    ev.add_argument("--size", help="WxH for raw YUV input")
    ev.add_argument("--pixfmt", default="auto")
    ev.set_defaults(func=cmd_eval)

    bd = sub.add_parser("bdrate", help="Bjontegaard delta between curves")
    bd.add_argument("anchor")
    bd.add_argument("test")
    bd.add_argument("--plot", help="write an RD plot PNG")
    bd.set_defaults(func=cmd_bdrate)

    tr = sub.add_parser("train", parents=[common_model],
                        help="run one training stage")
    tr.add_argument("--stage", required=True, choices=STAGES)
    tr.add_argument("--ckpt", help="checkpoint to resume/extend")
    tr.add_argument("--out", help="checkpoint output path")
    tr.add_argument("--steps", type=int, default=None)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--log", help="JSON-lines metrics file")
    tr.set_defaults(func=cmd_train)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NvcError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
