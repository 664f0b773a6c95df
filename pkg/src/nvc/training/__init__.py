"""Staged training: losses, synthetic data, stage runner."""

from .data import CLIP_KINDS, folder_clip_sampler, make_clip, sample_clips
from .losses import multiscale_prediction_loss, pool_pyramid, rd_loss
from .stages import (MOTION_DISTORTION_STAGES, PREREQUISITES, STAGES,
                     TrainConfig, lr_at, run_stage, stage_parameters,
                     unrolled_inter_loss)

__all__ = [
    "CLIP_KINDS", "folder_clip_sampler", "make_clip", "sample_clips",
    "multiscale_prediction_loss", "pool_pyramid", "rd_loss",
    "MOTION_DISTORTION_STAGES", "PREREQUISITES", "STAGES", "TrainConfig",
    "lr_at", "run_stage", "stage_parameters", "unrolled_inter_loss",
]
