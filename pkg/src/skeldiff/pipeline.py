"""End-to-end stages shared by the CLI and the verification suite:
model construction, the two training phases, and full-model checkpoints."""

from collections import OrderedDict

from .autoencoder import Autoencoder, pretrain
from .config import RunConfig
from .data_io import load_checkpoint, save_checkpoint
from .diffusion import Denoiser, NoiseSchedule, train
from .errors import CheckpointError
from .graph import SkeletonGraph, load_skeleton
from .rng import Rng
from .stgcn import collect_state, load_state


def build_schedule(config: RunConfig) -> NoiseSchedule:
    return NoiseSchedule(config.diffusion_steps, config.beta_start,
                         config.beta_end)


def run_pretrain(dataset, skeleton: SkeletonGraph, config: RunConfig):
    """Train the autoencoder from scratch; returns (model, loss curve)."""
    rng = Rng(config.seed)
    model = Autoencoder(skeleton, config, rng)
    curve = pretrain(dataset, model, config, rng)
    return model, curve


def run_train(dataset, ae: Autoencoder, config: RunConfig):
    """Train the denoiser against the frozen autoencoder."""
    rng = Rng(config.seed)
    denoiser = Denoiser(ae.skeleton, config, rng)
    sched = build_schedule(config)
    curve = train(dataset, ae, denoiser, sched, config, rng)
    return denoiser, sched, curve


def _skeleton_for(config: RunConfig) -> SkeletonGraph:
    return load_skeleton(config.skeleton)


def save_autoencoder(path, ae: Autoencoder, config: RunConfig,
                     extra_metadata: dict | None = None) -> None:
    arrays = collect_state(ae.state_items())
    meta = {"kind": "autoencoder", "seed": config.seed,
            "config": config.to_dict()}
    meta.update(extra_metadata or {})
    save_checkpoint(path, arrays, meta)


def save_full(path, ae: Autoencoder, denoiser: Denoiser, config: RunConfig,
              extra_metadata: dict | None = None) -> None:
    arrays = OrderedDict()
    arrays.update(collect_state(ae.state_items()))
    arrays.update(collect_state(denoiser.state_items()))
    meta = {"kind": "full", "seed": config.seed, "config": config.to_dict()}
    meta.update(extra_metadata or {})
    save_checkpoint(path, arrays, meta)


def load_models(path):
    """Rebuild models from a checkpoint; returns (ae, denoiser|None, config)."""
    arrays, meta = load_checkpoint(path)
    try:
        config = RunConfig.from_dict(meta["config"])
    except (KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: checkpoint lacks a config") from exc
    skeleton = _skeleton_for(config)
    rng = Rng(config.seed)
    ae = Autoencoder(skeleton, config, rng)
    try:
        load_state(ae.state_items(), arrays)
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing tensor {exc}") from exc
    denoiser = None
    if meta.get("kind") == "full":
        denoiser = Denoiser(skeleton, config, rng)
        try:
            load_state(denoiser.state_items(), arrays)
        except KeyError as exc:
            raise CheckpointError(f"{path}: missing tensor {exc}") from exc
    return ae, denoiser, config
