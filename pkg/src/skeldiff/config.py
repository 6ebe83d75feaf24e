"""Run configuration: one flat record of every knob, with defaults matching
the reported settings the pipeline was designed around.  The effective
config is serialized into each checkpoint and report for provenance."""

import json
from dataclasses import asdict, dataclass, fields

from .errors import DataFormatError


@dataclass
class RunConfig:
    seed: int = 7
    skeleton: str = "default"
    encoder_channels: tuple = (8, 16, 64, 128)
    denoiser_channels: tuple = (32, 64, 128)
    temporal_kernel: int = 7
    dilation: int = 2
    mask_ratio: float = 0.5
    span_min: int = 5
    span_max: int = 20
    diffusion_steps: int = 1000
    infer_steps: int = 5
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    lr: float = 1e-3
    pretrain_epochs: int = 50
    train_epochs: int = 60
    batch_size: int = 8
    batch_frames: int = 60
    fill_mode: str = "interp"
    remove_frames: int = 20
    every_frames: int = 30
    stochastic_sampler: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["encoder_channels"] = list(self.encoder_channels)
        d["denoiser_channels"] = list(self.denoiser_channels)
        return d

    @staticmethod
    def from_dict(doc: dict) -> "RunConfig":
        known = {f.name for f in fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise DataFormatError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        for key in ("encoder_channels", "denoiser_channels"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return RunConfig(**kwargs)

    @staticmethod
    def load(path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(
                    f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"
                ) from exc
        if not isinstance(doc, dict):
            raise DataFormatError(f"{path}: config must be a JSON object")
        return RunConfig.from_dict(doc)
