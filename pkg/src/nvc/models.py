"""Model bundle: the four networks of the inter-coding pipeline plus
checkpoint serialization (versioned archives keyed by module path)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path

import torch
from torch import nn

from .backbone import VaeConfig
from .intra import IntraCodec
from .mcn import MultiscaleCompensation, SingleScaleCompensation
from .motion import MotionCodec
from .residual import ResidualCodec

__all__ = ["ModelConfig", "NvcModels", "build_models", "save_checkpoint",
           "load_checkpoint"]

CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    latent_channels: int = 192
    base_width: int = 128
    hyper_channels: int = 192
    ctx_features: int = 12
    fusion_width: int = 32
    mcn_width_mult: float = 1.0
    use_temporal: bool = True
    # Single-scale compensation baseline, kept for ablation runs only.
    ss_mcn: bool = False

    def scaled(self, width_mult: float) -> "ModelConfig":
        def s(n):
            return max(8, int(round(n * width_mult)))
        return ModelConfig(
            latent_channels=s(self.latent_channels),
            base_width=s(self.base_width),
            hyper_channels=s(self.hyper_channels),
            ctx_features=self.ctx_features,
            fusion_width=self.fusion_width,
            mcn_width_mult=self.mcn_width_mult * width_mult,
            use_temporal=self.use_temporal,
            ss_mcn=self.ss_mcn,
        )


class NvcModels(nn.Module):
    """Intra, motion, compensation, and residual networks as one unit."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        vae = VaeConfig(latent_channels=config.latent_channels,
                        base_width=config.base_width,
                        hyper_channels=config.hyper_channels)
        self.intra = IntraCodec(vae, config.ctx_features, config.fusion_width)
        motion_vae = VaeConfig(in_channels=6, stage_block="lam",
                               latent_channels=config.latent_channels,
                               base_width=config.base_width,
                               hyper_channels=config.hyper_channels)
        self.motion = MotionCodec(motion_vae, config.ctx_features,
                                  config.fusion_width,
                                  use_temporal=config.use_temporal)
        self.mcn = (SingleScaleCompensation() if config.ss_mcn
                    else MultiscaleCompensation(3, config.mcn_width_mult))
        self.res = ResidualCodec(vae, config.ctx_features,
                                 config.fusion_width)


def build_models(config: ModelConfig | None = None) -> NvcModels:
    return NvcModels(config or ModelConfig())


def save_checkpoint(models: NvcModels, path: str | Path,
                    extra: dict | None = None) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "model_config": asdict(models.config),
        "state": models.state_dict(),
        "extra": extra or {},
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> tuple[NvcModels, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    models = build_models(ModelConfig(**payload["model_config"]))
    models.load_state_dict(payload["state"])
    return models, payload.get("extra", {})
