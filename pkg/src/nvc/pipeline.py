"""GOP orchestration: sequences the three compressors per frame, manages
references and temporal state, and produces/consumes the container.

Per GOP: the first frame goes through the intra compressor; every further
frame codes motion against the previous *reconstruction*, compensates,
codes the residual, and reconstructs. The decoder mirrors the exact same
computation from decoded latents, so encoder- and decoder-side
reconstructions are bit-identical and references never drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from .backbone import crop_frame, pad_frame
from .bitstream import (FrameRecord, NvcBitstream, StreamHeader, read_stream,
                        write_stream)
from .errors import ShapeMismatchError
from .metrics import ms_ssim, psnr
from .models import NvcModels
from .residual import reconstruct

__all__ = ["CodecConfig", "Gop", "RDPoint", "encode_sequence",
           "decode_sequence", "rd_point", "split_gops"]

DEFAULT_LAMBDA_LADDER = (64.0, 128.0, 256.0, 512.0, 1024.0, 2048.0)


@dataclass
class CodecConfig:
    lambda_intra: float = 256.0
    distortion_metric: str = "MSE"
    gop_size: int = 10
    lambda_index: int = 0
    model_path: str | None = None
    intra_only: bool = False

    def __post_init__(self):
        if self.lambda_intra <= 0:
            raise ValueError("lambda must be positive")
        if self.distortion_metric not in ("MSE", "MS-SSIM"):
            raise ValueError(
                f"unknown distortion metric {self.distortion_metric!r}")
        if self.gop_size < 1:
            raise ValueError("gop_size must be >= 1")

    @property
    def lambda_inter(self) -> float:
        return self.lambda_intra / 4.0

    @property
    def effective_gop(self) -> int:
        return 1 if self.intra_only else self.gop_size


@dataclass
class Gop:
    """One group of pictures: an intra frame plus trailing P-frames."""

    frames: torch.Tensor  # (T, 3, H, W) in [0, 1]

    def __post_init__(self):
        if self.frames.dim() != 4 or self.frames.shape[1] != 3:
            raise ShapeMismatchError("GOP frames must be (T, 3, H, W)")
        if float(self.frames.min()) < 0.0 or float(self.frames.max()) > 1.0:
            raise ValueError("frame values must lie in [0, 1]")


def split_gops(n_frames: int, gop_size: int) -> list[range]:
    return [range(start, min(start + gop_size, n_frames))
            for start in range(0, n_frames, gop_size)]


def _as_frame_tensor(frames) -> torch.Tensor:
    if not isinstance(frames, torch.Tensor):
        shapes = {tuple(f.shape) for f in frames}
        if len(shapes) > 1:
            raise ShapeMismatchError(
                f"frame dimensions changed mid-sequence: {sorted(shapes)}")
        frames = torch.stack(list(frames))
    Gop(frames)  # shape/value validation
    return frames


@torch.no_grad()
def encode_sequence(frames: torch.Tensor, models: NvcModels,
                    config: CodecConfig,
                    return_recon: bool = False,
                    flow_hook=None):
    """Code a full sequence into an :class:`NvcBitstream`.

    ``flow_hook(frame_index, flows)`` is called with each P-frame's
    decoded flow pyramid (debug dumps).
    """
    frames = _as_frame_tensor(frames)
    models.eval()
    n, _, height, width = frames.shape
    gop = config.effective_gop
    header = StreamHeader(width=width, height=height, gop_size=gop,
                          model_id=config.lambda_index, frame_count=n)

    records: list[FrameRecord] = []
    recons = []
    padded = pad_frame(frames)
    ph, pw = padded.shape[-2:]
    reference = None
    state = None
    for i in range(n):
        x = padded[i:i + 1]
        if i % gop == 0:
            chunks, recon = models.intra.compress(x)
            records.append(FrameRecord("I", chunks))
            state = models.motion.initial_state((ph, pw))
        else:
            motion_chunks, flows, state = models.motion.compress(
                reference, x, state)
            if flow_hook is not None:
                flow_hook(i, flows)
            pred = models.mcn(reference, list(flows))
            res_chunks, r_hat = models.res.compress(x - pred)
            recon = reconstruct(pred, r_hat)
            records.append(FrameRecord("P", motion_chunks + res_chunks))
        reference = recon
        if return_recon:
            recons.append(crop_frame(recon, height, width)[0])

    stream = NvcBitstream(header, records)
    if return_recon:
        return stream, torch.stack(recons)
    return stream


@torch.no_grad()
def decode_sequence(stream: NvcBitstream | bytes,
                    models: NvcModels) -> torch.Tensor:
    """Decode a container (or raw bytes) back to frames (T, 3, H, W)."""
    if isinstance(stream, (bytes, bytearray)):
        stream = read_stream(bytes(stream))
    models.eval()
    header = stream.header
    ph = -(-header.height // 64) * 64
    pw = -(-header.width // 64) * 64
    gop = header.gop_size

    out = []
    reference = None
    state = None
    for i, record in enumerate(stream.frames):
        if i % gop == 0:
            recon = models.intra.decompress(record.chunks,
                                            (ph // 16, pw // 16))
            state = models.motion.initial_state((ph, pw))
        else:
            flows, state = models.motion.decompress(record.chunks[:2], state,
                                                    (ph, pw))
            pred = models.mcn(reference, list(flows))
            r_hat = models.res.decompress(record.chunks[2:],
                                          (ph // 16, pw // 16))
            recon = reconstruct(pred, r_hat)
        reference = recon
        out.append(crop_frame(recon, header.height, header.width)[0])
    return torch.stack(out)


@dataclass
class RDPoint:
    """Rate-distortion summary of one coded sequence."""

    bpp: float
    psnr: float
    ms_ssim: float
    frame_psnr: list[float] = field(default_factory=list)
    frame_ms_ssim: list[float] = field(default_factory=list)
    frame_bpp: list[float] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"bpp": self.bpp, "psnr": self.psnr, "ms_ssim": self.ms_ssim,
                "frame_psnr": self.frame_psnr,
                "frame_ms_ssim": self.frame_ms_ssim,
                "frame_bpp": self.frame_bpp}


def rd_point(frames: torch.Tensor, stream: NvcBitstream,
             recon: torch.Tensor) -> RDPoint:
    """Rate and quality of ``recon`` against ``frames`` under ``stream``."""
    if frames.shape != recon.shape:
        raise ShapeMismatchError("source/reconstruction shape mismatch")
    n, _, height, width = frames.shape
    pixels_per_frame = height * width
    frame_bits = [8 * sum(13 + len(c.payload) for c in rec.chunks) + 16
                  for rec in stream.frames]
    frame_psnr = [psnr(frames[i], recon[i]) for i in range(n)]
    frame_ms = [float(ms_ssim(frames[i], recon[i])) for i in range(n)]
    return RDPoint(
        bpp=stream.bits_per_pixel(),
        psnr=sum(frame_psnr) / n,
        ms_ssim=sum(frame_ms) / n,
        frame_psnr=frame_psnr,
        frame_ms_ssim=frame_ms,
        frame_bpp=[b / pixels_per_frame for b in frame_bits],
    )
