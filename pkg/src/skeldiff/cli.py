"""Command-line interface: data generation, the two training stages,
transition synthesis, and protocol evaluation.

Every run appends one JSON line (command, effective config, metric summary)
to the run log.  Failures print a single machine-parsable JSON error line
to stderr and exit with a class-specific code:

    0 ok, 1 other error, 2 usage, 3 missing file, 4 bad file format,
    5 joint-count mismatch, 6 non-finite abort, 7 bad checkpoint
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import data_io, evaluation
from .config import RunConfig
from .diffusion import SamplerConfig, sample_transitions
from .errors import (CheckpointError, DataFormatError, MaskError,
                     NonFiniteError, SkeldiffError, SkeletonMismatchError)
from .graph import load_skeleton
from .masking import interval_mask, random_mask
from .pipeline import (build_schedule, load_models, run_pretrain, run_train,
                       save_autoencoder, save_full)
from .rng import Rng

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_FORMAT = 4
EXIT_JOINT_MISMATCH = 5
EXIT_NONFINITE = 6
EXIT_BAD_CHECKPOINT = 7


def _log_run(path, command, config: RunConfig, metrics: dict,
             artifacts: list) -> None:
    record = {
        "command": command,
        "seed": config.seed,
        "config": config.to_dict(),
        "metrics": metrics,
        "artifacts": artifacts,
    }
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")


def _apply_overrides(config: RunConfig, args, keys) -> RunConfig:
    updates = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            updates[key] = value
    return dataclasses.replace(config, **updates)


def _base_config(args) -> RunConfig:
    if getattr(args, "config", None):
        return RunConfig.load(args.config)
    return RunConfig()


_TRAIN_KEYS = ("seed", "skeleton", "lr", "batch_size", "batch_frames",
               "mask_ratio", "fill_mode")


def cmd_gen(args) -> dict:
    config = _apply_overrides(_base_config(args), args, ("seed", "skeleton"))
    skeleton = load_skeleton(config.skeleton)
    rng = Rng(config.seed)
    seqs = data_io.gen_dataset(args.n, args.t, skeleton, rng,
                               noise=args.noise)
    data_io.save_poses(args.out, seqs, skeleton.num_joints)
    metrics = {"sequences": len(seqs), "frames": args.t,
               "joints": skeleton.num_joints}
    _log_run(args.log, "gen", config, metrics, [args.out])
    print(f"wrote {len(seqs)} sequences to {args.out}")
    return metrics


def cmd_pretrain(args) -> dict:
    config = _apply_overrides(_base_config(args), args, _TRAIN_KEYS)
    if args.epochs is not None:
        config = dataclasses.replace(config, pretrain_epochs=args.epochs)
    skeleton = load_skeleton(config.skeleton)
    dataset = data_io.load_poses(args.data,
                                 expected_joints=skeleton.num_joints)
    model, curve = run_pretrain(dataset, skeleton, config)
    save_autoencoder(args.out, model, config,
                     {"loss_curve": curve})
    metrics = {"epochs": len(curve), "final_loss": curve[-1],
               "first_loss": curve[0]}
    _log_run(args.log, "pretrain", config, metrics, [args.out])
    print(json.dumps({"effective_config": config.to_dict()}, sort_keys=True))
    print(f"pretrain: final epoch loss {curve[-1]:.6f} -> {args.out}")
    return metrics


def cmd_train(args) -> dict:
    ae, _, config = load_models(args.ae)
    if getattr(args, "config", None):
        config = RunConfig.load(args.config)
    config = _apply_overrides(config, args, _TRAIN_KEYS)
    if args.epochs is not None:
        config = dataclasses.replace(config, train_epochs=args.epochs)
    dataset = data_io.load_poses(args.data,
                                 expected_joints=ae.skeleton.num_joints)
    denoiser, _, curve = run_train(dataset, ae, config)
    save_full(args.out, ae, denoiser, config, {"loss_curve": curve})
    metrics = {"epochs": len(curve), "final_loss": curve[-1],
               "first_loss": curve[0]}
    _log_run(args.log, "train", config, metrics, [args.out])
    print(json.dumps({"effective_config": config.to_dict()}, sort_keys=True))
    print(f"train: final epoch loss {curve[-1]:.6f} -> {args.out}")
    return metrics


def _load_single_sequence(path, expected_joints):
    seqs = data_io.load_poses(path, expected_joints=expected_joints)
    if len(seqs) != 1:
        raise DataFormatError(
            f"{path}: expected exactly one sequence, found {len(seqs)}")
    return seqs[0]


def cmd_infer(args) -> dict:
    ae, denoiser, config = load_models(args.model)
    if denoiser is None:
        raise CheckpointError(
            f"{args.model}: autoencoder-only checkpoint, run `train` first")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.steps is not None:
        overrides["infer_steps"] = args.steps
    if args.stochastic:
        overrides["stochastic_sampler"] = True
    config = dataclasses.replace(config, **overrides)
    v = ae.skeleton.num_joints
    pre = _load_single_sequence(args.pre, v)
    post = _load_single_sequence(args.post, v)
    sched = build_schedule(config)
    sampler = SamplerConfig(config.infer_steps, config.stochastic_sampler)
    out = sample_transitions(pre, post, args.trans, ae, denoiser, sched,
                             sampler, Rng(config.seed))
    data_io.save_poses(args.out, [out], v)
    if args.dump_svg:
        dump_svg_frames(args.dump_svg, out, ae.skeleton)
    metrics = {"frames_out": out.shape[1], "transition_frames": args.trans,
               "pre_frames": pre.shape[1], "post_frames": post.shape[1]}
    _log_run(args.log, "infer", config, metrics, [args.out])
    print(f"infer: wrote {out.shape[1]} frames to {args.out}")
    return metrics


def cmd_eval(args) -> dict:
    ae, denoiser, config = load_models(args.model)
    if denoiser is None:
        raise CheckpointError(
            f"{args.model}: autoencoder-only checkpoint, run `train` first")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.remove is not None:
        overrides["remove_frames"] = args.remove
    if args.every is not None:
        overrides["every_frames"] = args.every
    if args.ratio is not None:
        overrides["mask_ratio"] = args.ratio
    config = dataclasses.replace(config, **overrides)
    testset = data_io.load_poses(args.data,
                                 expected_joints=ae.skeleton.num_joints)
    sched = build_schedule(config)
    if args.mask_mode == "interval":
        protocol = {"mode": "interval", "remove": config.remove_frames,
                    "every": config.every_frames}

        def make_mask(t):
            return interval_mask(t, config.every_frames, config.remove_frames)
    else:
        protocol = {"mode": "random", "ratio": config.mask_ratio}
        mask_rng = Rng(config.seed + 1)

        def make_mask(t):
            return random_mask(t, config.mask_ratio, mask_rng,
                               (config.span_min, config.span_max))

    report = evaluation.evaluate(testset, ae, denoiser, sched, config,
                                 make_mask, seed=config.seed,
                                 protocol=protocol)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    print(report.to_table())
    metrics = dict(report.aggregates)
    _log_run(args.log, "eval", config, metrics, [args.out])
    return metrics


def dump_svg_frames(directory, seq: np.ndarray, skeleton) -> None:
    """One SVG per frame: bones as segments of the xy projection."""
    os.makedirs(directory, exist_ok=True)
    xy = seq[:2]
    lo = xy.min(axis=(1, 2)) - 0.3
    hi = xy.max(axis=(1, 2)) + 0.3
    span = np.maximum(hi - lo, 1e-6)
    size = 320.0
    for t in range(seq.shape[1]):
        px = (xy[0, t] - lo[0]) / span[0] * size
        py = size - (xy[1, t] - lo[1]) / span[1] * size
        parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
                 f'width="{size:.0f}" height="{size:.0f}">']
        for i, j in sorted(skeleton.edges):
            parts.append(
                f'<line x1="{px[i]:.2f}" y1="{py[i]:.2f}" x2="{px[j]:.2f}" '
                f'y2="{py[j]:.2f}" stroke="black" stroke-width="2"/>')
        for v in range(seq.shape[2]):
            parts.append(f'<circle cx="{px[v]:.2f}" cy="{py[v]:.2f}" r="3" '
                         f'fill="crimson"/>')
        parts.append("</svg>")
        name = os.path.join(directory, f"frame_{t:05d}.svg")
        with open(name, "w", encoding="utf-8") as fh:
            fh.write("\n".join(parts))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skeldiff",
        description="Skeleton-motion transition synthesis with a "
                    "graph-conditioned latent diffusion model.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--log", default="runs.jsonl",
                       help="JSON-lines run log (appended)")
        p.add_argument("--config", default=None,
                       help="flat JSON config file; flags override it")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--skeleton", default=None,
                       help='"default" or a skeleton JSON path')

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    common(p)
    p.add_argument("--n", type=int, required=True, help="sequence count")
    p.add_argument("--t", type=int, required=True, help="frames per sequence")
    p.add_argument("--noise", type=float, default=0.0,
                   help="joint-angle jitter std (radians)")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("pretrain", help="train the autoencoder")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("train", help="train the diffusion denoiser")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--ae", required=True, help="autoencoder checkpoint")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--ratio", dest="mask_ratio", type=float, default=None)
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("infer", help="synthesize transition frames")
    common(p)
    p.add_argument("--model", required=True, help="full checkpoint")
    p.add_argument("--pre", required=True, help="preceding segment (1 sequence)")
    p.add_argument("--post", required=True, help="following segment (1 sequence)")
    p.add_argument("--trans", type=int, required=True,
                   help="transition frames to synthesize")
    p.add_argument("--steps", type=int, default=None,
                   help="inference steps (default from checkpoint config)")
    p.add_argument("--stochastic", action="store_true",
                   help="redraw noise between steps instead of reusing it")
    p.add_argument("--dump-svg", default=None,
                   help="directory for per-frame 2-d projection SVGs")
    p.add_argument("-o", "--out", required=True)

    p = sub.add_parser("eval", help="score inpainting against interpolation")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--mask-mode", choices=("interval", "random"),
                   default="interval")
    p.add_argument("--remove", type=int, default=None,
                   help="frames removed per block (interval mode)")
    p.add_argument("--every", type=int, default=None,
                   help="block length in frames (interval mode)")
    p.add_argument("--ratio", type=float, default=None,
                   help="mask ratio (random mode)")
    p.add_argument("-o", "--out", required=True)
    return parser


_HANDLERS = {
    "gen": cmd_gen,
    "pretrain": cmd_pretrain,
    "train": cmd_train,
    "infer": cmd_infer,
    "eval": cmd_eval,
}

_ERROR_CODES = (
    (SkeletonMismatchError, EXIT_JOINT_MISMATCH),
    (NonFiniteError, EXIT_NONFINITE),
    (CheckpointError, EXIT_BAD_CHECKPOINT),
    (DataFormatError, EXIT_BAD_FORMAT),
    (MaskError, EXIT_ERROR),
    (SkeldiffError, EXIT_ERROR),
    (FileNotFoundError, EXIT_MISSING_FILE),
)


def _fail(code: int, exc: BaseException) -> int:
    sys.stderr.write(json.dumps({
        "error": {"code": code, "type": type(exc).__name__,
                  "message": str(exc)}}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage errors itself
        return int(exc.code or 0)
    try:
        _HANDLERS[args.command](args)
    except tuple(code_pair[0] for code_pair in _ERROR_CODES) as exc:
        for klass, code in _ERROR_CODES:
            if isinstance(exc, klass):
                return _fail(code, exc)
    except ValueError as exc:
        return _fail(EXIT_ERROR, exc)
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
