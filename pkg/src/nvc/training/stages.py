"""Staged optimization of the codec.

The inter-coding models cannot be trained jointly from scratch, so
optimization is progressive: the intra codec first, then the motion
compressor (plain multiscale prediction loss, then rate-constrained),
the compensation network against frozen flows, a joint two-frame
refinement with intra-reconstructed references, residual pretraining
against frozen predictors, and finally a four-frame unrolled refinement
where each decoded frame is recursively the next reference, so the
update sees P-frame error propagation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..backbone import pad_frame
from ..errors import ConfigError
from ..mcn import warp
from ..metrics import ms_ssim, psnr
from ..models import NvcModels
from .data import CLIP_KINDS, sample_clips
from .losses import multiscale_prediction_loss, pool_pyramid, rd_loss

__all__ = ["STAGES", "MOTION_DISTORTION_STAGES", "PREREQUISITES",
           "TrainConfig", "run_stage", "unrolled_inter_loss",
           "stage_parameters", "lr_at"]

STAGES = ("intra", "motion_pretrain", "motion_rd", "mcn_pretrain", "joint2",
          "res_pretrain", "multiframe4")

# Stages whose distortion is the multiscale prediction loss.
MOTION_DISTORTION_STAGES = ("motion_pretrain", "motion_rd", "mcn_pretrain",
                            "joint2")

PREREQUISITES = {
    "intra": (),
    "motion_pretrain": (),
    "motion_rd": ("motion_pretrain",),
    "mcn_pretrain": ("motion_rd",),
    "joint2": ("mcn_pretrain", "intra"),
    "res_pretrain": ("joint2",),
    "multiframe4": ("joint2", "res_pretrain"),
}


@dataclass
class TrainConfig:
    stage: str
    lambda_intra: float = 256.0
    distortion_metric: str = "MSE"
    steps: int = 500
    batch_size: int = 4
    lr_initial: float = 1e-4
    lr_final: float = 1e-5
    lr_halve_every_epochs: int = 10
    steps_per_epoch: int = 100
    crop_intra: int = 256
    crop_inter: int = 192
    frames_per_sample: int = 2
    seed: int = 0
    clip_kinds: tuple = CLIP_KINDS
    max_speed: float = 3.0
    clip_sampler: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ConfigError(f"unknown stage {self.stage!r}")
        if self.lambda_intra <= 0:
            raise ConfigError("lambda must be positive")
        if self.distortion_metric not in ("MSE", "MS-SSIM"):
            raise ConfigError(
                f"unknown distortion metric {self.distortion_metric!r}")
        if (self.distortion_metric == "MS-SSIM"
                and self.stage in MOTION_DISTORTION_STAGES):
            raise ConfigError(
                "MS-SSIM is not a valid motion-stage distortion; motion "
                "training uses the multiscale L1 prediction loss")
        if self.stage == "multiframe4" and self.frames_per_sample != 4:
            raise ConfigError("multiframe4 trains on 4-frame samples")
        if self.frames_per_sample not in (2, 4):
            raise ConfigError("frames_per_sample must be 2 or 4")

    @property
    def lambda_inter(self) -> float:
        return self.lambda_intra / 4.0


def lr_at(config: TrainConfig, step: int) -> float:
    epoch = step // config.steps_per_epoch
    halvings = epoch // config.lr_halve_every_epochs
    return max(config.lr_final, config.lr_initial * 0.5 ** halvings)


def stage_parameters(models: NvcModels, stage: str) -> list:
    groups = {
        "intra": [models.intra],
        "motion_pretrain": [models.motion],
        "motion_rd": [models.motion],
        "mcn_pretrain": [models.mcn],
        "joint2": [models.motion, models.mcn],
        "res_pretrain": [models.res],
        "multiframe4": [models.motion, models.mcn, models.res],
    }[stage]
    params = []
    for g in groups:
        params.extend(g.parameters())
    return params


def _step_seed(config: TrainConfig, step: int) -> int:
    return (config.seed * 1_000_003 + step * 7919) & 0x7FFFFFFF


def _sample(config: TrainConfig, step: int, n_frames: int,
            size: int) -> torch.Tensor:
    gen = torch.Generator().manual_seed(_step_seed(config, step))
    if config.clip_sampler is not None:
        return config.clip_sampler(gen, config.batch_size)
    return sample_clips(gen, config.clip_kinds, config.batch_size, n_frames,
                        size, config.max_speed)


def _distortion(config: TrainConfig, target: torch.Tensor,
                output: torch.Tensor) -> torch.Tensor:
    if config.distortion_metric == "MS-SSIM":
        return 1.0 - ms_ssim(output.clamp(0, 1), target)
    return ((output - target) ** 2).mean()


def _warped_pyramid_loss(reference, current, flows):
    ref_pyr = pool_pyramid(reference)
    cur_pyr = pool_pyramid(current)
    pred_pyr = [warp(r, f) for r, f in zip(ref_pyr, flows)]
    return multiscale_prediction_loss(pred_pyr, cur_pyr)


def _prediction_pyramid_loss(prediction, current):
    return multiscale_prediction_loss(pool_pyramid(prediction),
                                      pool_pyramid(current))


@torch.no_grad()
def _intra_reference(models: NvcModels, frame: torch.Tensor) -> torch.Tensor:
    y_hat = torch.round(models.intra.encoder(frame))
    return models.intra.reconstruct_from_latent(y_hat)


def unrolled_inter_loss(models: NvcModels, clips: torch.Tensor,
                        config: TrainConfig, noise_seed: int | None,
                        reference_hook=None) -> dict:
    """Recursive multi-frame loss: 1 intra reference + P-frame chain.

    Returns per-frame distortions/rates plus the summed Lagrangian; the
    next P-frame's reference is the current frame's reconstruction (not
    the source), so reconstruction errors propagate into the loss.
    ``reference_hook`` lets probes tamper with the reconstruction before
    it becomes the reference.
    """
    b, t = clips.shape[:2]
    frames = pad_frame(clips.reshape(b * t, *clips.shape[2:]))
    frames = frames.reshape(b, t, *frames.shape[1:])
    pixels = b * frames.shape[-2] * frames.shape[-1]

    reference = _intra_reference(models, frames[:, 0])
    state = models.motion.initial_state(frames.shape[-2:], batch=b)
    total = None
    logs = {"frame_distortion": [], "frame_bpp": [], "distortion_terms": []}
    for p in range(1, t):
        cur = frames[:, p]
        seed = None if noise_seed is None else noise_seed + 16 * p
        mout = models.motion(reference, cur, state, "train", seed)
        state = mout["state"]
        pred = models.mcn(reference, list(mout["flows"]))
        rout = models.res(cur - pred, "train",
                          None if seed is None else seed + 8)
        recon_raw = pred + rout["recon_raw"]
        dist = _distortion(config, cur, recon_raw)
        bits = mout["bits"] + rout["bits"]
        term = rd_loss(dist, bits, config.lambda_inter, pixels)
        total = term if total is None else total + term
        logs["frame_distortion"].append(float(dist.detach()))
        logs["frame_bpp"].append(float(bits.detach()) / pixels)
        logs["distortion_terms"].append(dist)

        recon = (pred + rout["recon"]).clamp(0.0, 1.0)
        if reference_hook is not None:
            recon = reference_hook(recon, p)
        reference = recon

    logs["loss"] = total
    return logs


def _stage_step(models: NvcModels, config: TrainConfig, step: int) -> dict:
    seed = _step_seed(config, step) ^ 0x5EED
    stage = config.stage
    log: dict = {"stage": stage, "step": step}

    if stage == "intra":
        x = _sample(config, step, 1, config.crop_intra)[:, 0]
        x = pad_frame(x)
        out = models.intra(x, "train", seed)
        dist = _distortion(config, x, out["recon_raw"])
        pixels = x.shape[0] * x.shape[-2] * x.shape[-1]
        loss = rd_loss(dist, out["bits"], config.lambda_intra, pixels)
        log.update(loss=float(loss.detach()), distortion=float(dist.detach()),
                   bpp_est=float(out["bits"].detach()) / pixels,
                   psnr=psnr(x.detach(), out["recon"].detach()))
        log["_loss_tensor"] = loss
        return log

    n_frames = 4 if stage == "multiframe4" else 2
    clips = _sample(config, step, n_frames, config.crop_inter)

    if stage == "multiframe4":
        out = unrolled_inter_loss(models, clips, config, seed)
        loss = out["loss"]
        log.update(loss=float(loss.detach()),
                   frame_distortion=out["frame_distortion"],
                   frame_bpp=out["frame_bpp"])
        log["_loss_tensor"] = loss
        return log

    b = clips.shape[0]
    frames = pad_frame(clips.reshape(b * n_frames, *clips.shape[2:]))
    frames = frames.reshape(b, n_frames, *frames.shape[1:])
    ref, cur = frames[:, 0], frames[:, 1]
    pixels = b * cur.shape[-2] * cur.shape[-1]
    state = models.motion.initial_state(cur.shape[-2:], batch=b)

    if stage in ("motion_pretrain", "motion_rd"):
        out = models.motion(ref, cur, state, "train", seed)
        dist = _warped_pyramid_loss(ref, cur, list(out["flows"]))
        if stage == "motion_pretrain":
            loss = dist
            log.update(loss=float(loss.detach()), distortion=float(dist.detach()))
        else:
            loss = rd_loss(dist, out["bits"], config.lambda_inter, pixels)
            log.update(loss=float(loss.detach()), distortion=float(dist.detach()),
                       bpp_est=float(out["bits"].detach()) / pixels)
        log["_loss_tensor"] = loss
        return log

    if stage == "mcn_pretrain":
        with torch.no_grad():
            mout = models.motion(ref, cur, state, "infer")
        pred = models.mcn(ref, list(mout["flows"]))
        loss = _prediction_pyramid_loss(pred, cur)
        log.update(loss=float(loss.detach()), psnr=psnr(cur.detach(), pred.detach()))
        log["_loss_tensor"] = loss
        return log

    if stage == "joint2":
        reference = _intra_reference(models, ref)
        out = models.motion(reference, cur, state, "train", seed)
        pred = models.mcn(reference, list(out["flows"]))
        dist = _prediction_pyramid_loss(pred, cur)
        loss = rd_loss(dist, out["bits"], config.lambda_inter, pixels)
        log.update(loss=float(loss.detach()), distortion=float(dist.detach()),
                   bpp_est=float(out["bits"].detach()) / pixels,
                   psnr=psnr(cur.detach(), pred.detach()))
        log["_loss_tensor"] = loss
        return log

    if stage == "res_pretrain":
        with torch.no_grad():
            reference = _intra_reference(models, ref)
            mout = models.motion(reference, cur, state, "infer")
            pred = models.mcn(reference, list(mout["flows"]))
        rout = models.res(cur - pred, "train", seed)
        rec_raw = pred + rout["recon_raw"]
        dist = _distortion(config, cur, rec_raw)
        loss = rd_loss(dist, rout["bits"], config.lambda_inter, pixels)
        log.update(loss=float(loss.detach()), distortion=float(dist.detach()),
                   bpp_est=float(rout["bits"].detach()) / pixels,
                   psnr=psnr(cur.detach(), rec_raw.detach().clamp(0, 1)))
        log["_loss_tensor"] = loss
        return log

    raise ConfigError(f"unknown stage {stage!r}")


def run_stage(models: NvcModels, config: TrainConfig, stages_done=(),
              optimizer_state: dict | None = None, start_step: int = 0,
              log_cb=None):
    """Train one stage; returns (metric logs, optimizer state).

    Passing the returned optimizer state together with ``start_step``
    resumes deterministically: data sampling and quantization noise are
    derived from (seed, step) alone.
    """
    missing = [p for p in PREREQUISITES[config.stage]
               if p not in set(stages_done)]
    if missing:
        raise ConfigError(
            f"stage {config.stage!r} requires completed stages {missing}")

    trainable = set(id(p) for p in stage_parameters(models, config.stage))
    saved_flags = [(p, p.requires_grad) for p in models.parameters()]
    for p in models.parameters():
        p.requires_grad_(id(p) in trainable)

    params = [p for p in models.parameters() if id(p) in trainable]
    optimizer = torch.optim.Adam(params, lr=config.lr_initial)
    if optimizer_state is not None:
        optimizer.load_state_dict(optimizer_state)

    models.train()
    logs = []
    try:
        for step in range(start_step, start_step + config.steps):
            lr = lr_at(config, step)
            for group in optimizer.param_groups:
                group["lr"] = lr
            log = _stage_step(models, config, step)
            loss = log.pop("_loss_tensor")
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(params, 1.0)
            optimizer.step()
            log["lr"] = lr
            logs.append(log)
            if log_cb is not None:
                log_cb(log)
    finally:
        for p, flag in saved_flags:
            p.requires_grad_(flag)
        models.eval()
    return logs, optimizer.state_dict()
