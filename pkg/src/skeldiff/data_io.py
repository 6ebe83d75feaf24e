"""Synthetic motion generation, pose-sequence files, and checkpoints.

Motion is produced by forward kinematics over the skeleton tree rooted at
the center joint: every non-root joint carries a fixed rotation axis and a
sinusoidal joint angle whose amplitude/frequency/phase are drawn per chain
(root-to-leaf path) for each sequence.  Rotations preserve bone lengths
exactly, and sinusoidal angles make the trajectories curved in time.

Pose files are JSON with frames[t][v] = [x, y, z]; floats go through
Python's shortest round-trip repr, so loading restores the exact values.
Checkpoints are a JSON manifest plus a little-endian float64 sidecar blob.
"""

import json
import os
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import (CheckpointError, DataFormatError, ShapeError,
                     SkeletonMismatchError)
from .graph import SkeletonGraph
from .rng import Rng

CHECKPOINT_VERSION = 1

_DEFAULT_BONES = {
    "pelvis": 0.6, "neck": 0.6, "head": 0.35,
    "l_shoulder": 0.35, "l_elbow": 0.55, "l_wrist": 0.5, "l_hand": 0.25,
    "r_shoulder": 0.35, "r_elbow": 0.55, "r_wrist": 0.5, "r_hand": 0.25,
}

_DEFAULT_REST = {
    "pelvis": (0.0, -1.0, 0.0), "neck": (0.0, 1.0, 0.0),
    "head": (0.0, 1.0, 0.0),
    "l_shoulder": (-1.0, 0.0, 0.0), "l_elbow": (-1.0, -0.2, 0.1),
    "l_wrist": (-1.0, -0.1, 0.2), "l_hand": (-1.0, 0.0, 0.0),
    "r_shoulder": (1.0, 0.0, 0.0), "r_elbow": (1.0, -0.2, 0.1),
    "r_wrist": (1.0, -0.1, 0.2), "r_hand": (1.0, 0.0, 0.0),
}


@dataclass
class MotionParams:
    """Per-sequence sinusoid parameters, one entry per joint chain."""
    amplitudes: np.ndarray   # radians, |a| <= pi/2
    frequencies: np.ndarray  # cycles per frame, in (0, 0.1]
    phases: np.ndarray
    bone_lengths: np.ndarray  # per joint, bone to its tree parent
    noise: float = 0.0        # angle jitter std in radians

    def validate(self):
        if np.any(self.frequencies <= 0.0) or np.any(self.frequencies > 0.1):
            raise ShapeError("frequencies must lie in (0, 0.1] cycles/frame")
        if np.any(np.abs(self.amplitudes) > np.pi / 2):
            raise ShapeError("amplitudes must not exceed pi/2 radians")
        if np.any(self.bone_lengths < 0.0):
            raise ShapeError("bone lengths must be positive")


def joint_chains(skeleton: SkeletonGraph):
    """Chain id per joint: one chain per leaf of the tree rooted at center."""
    parent = skeleton.parents_from_center()
    children = [[] for _ in range(skeleton.num_joints)]
    for j, p in enumerate(parent):
        if p >= 0:
            children[p].append(j)
    leaves = sorted(j for j in range(skeleton.num_joints) if not children[j])
    chain = np.full(skeleton.num_joints, -1, dtype=np.int64)
    for cid, leaf in enumerate(leaves):
        j = leaf
        while j >= 0 and chain[j] < 0:
            chain[j] = cid
            j = parent[j]
    return chain, len(leaves)


def _rest_directions(skeleton: SkeletonGraph) -> np.ndarray:
    """Unit rest offsets from the parent joint.

    The canonical skeleton uses an anatomical table; other trees get
    deterministic golden-spiral directions so any skeleton works.
    """
    v = skeleton.num_joints
    dirs = np.zeros((v, 3))
    names = skeleton.joint_names
    if names and all(n in _DEFAULT_REST or i == skeleton.center
                     for i, n in enumerate(names)):
        for i, n in enumerate(names):
            if i != skeleton.center:
                dirs[i] = _DEFAULT_REST[n]
    else:
        golden = np.pi * (3.0 - np.sqrt(5.0))
        for i in range(v):
            z = 1.0 - 2.0 * ((i + 0.5) / v)
            r = np.sqrt(max(0.0, 1.0 - z * z))
            dirs[i] = (r * np.cos(golden * i), r * np.sin(golden * i), z)
    norm = np.linalg.norm(dirs, axis=1, keepdims=True)
    norm[norm == 0.0] = 1.0
    return dirs / norm


def default_bone_lengths(skeleton: SkeletonGraph) -> np.ndarray:
    v = skeleton.num_joints
    out = np.full(v, 0.5)
    if skeleton.joint_names:
        for i, n in enumerate(skeleton.joint_names):
            out[i] = _DEFAULT_BONES.get(n, 0.5)
    out[skeleton.center] = 0.0
    return out


def draw_motion_params(skeleton: SkeletonGraph, rng: Rng,
                       amp_range=(0.25, 0.75), freq_range=(0.02, 0.05),
                       noise: float = 0.0) -> MotionParams:
    _, n_chains = joint_chains(skeleton)
    a_lo, a_hi = amp_range
    f_lo, f_hi = freq_range
    params = MotionParams(
        amplitudes=a_lo + (a_hi - a_lo) * rng.uniform(n_chains),
        frequencies=f_lo + (f_hi - f_lo) * rng.uniform(n_chains),
        phases=2.0 * np.pi * rng.uniform(n_chains),
        bone_lengths=default_bone_lengths(skeleton),
        noise=float(noise),
    )
    params.validate()
    return params


def _axis_table(skeleton: SkeletonGraph) -> np.ndarray:
    """Fixed per-joint rotation axes (golden-spiral directions)."""
    v = skeleton.num_joints
    axes = np.zeros((v, 3))
    golden = np.pi * (3.0 - np.sqrt(5.0))
    for i in range(v):
        z = 1.0 - 2.0 * ((i + 0.37) / v)
        r = np.sqrt(max(0.0, 1.0 - z * z))
        axes[i] = (r * np.cos(golden * (i + 1)), r * np.sin(golden * (i + 1)), z)
    return axes / np.linalg.norm(axes, axis=1, keepdims=True)


def _rodrigues(axis: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Rotation matrices (T,3,3) about a fixed axis for angles theta (T,)."""
    kx, ky, kz = axis
    k = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    s = np.sin(theta)[:, None, None]
    c = (1.0 - np.cos(theta))[:, None, None]
    return np.eye(3)[None] + s * k[None] + c * (k @ k)[None]


def synthesize_sequence(skeleton: SkeletonGraph, params: MotionParams,
                        t: int, rng: Rng | None = None) -> np.ndarray:
    """Forward kinematics of one sequence; returns (3, T, V)."""
    params.validate()
    v = skeleton.num_joints
    parent = skeleton.parents_from_center()
    chain, _ = joint_chains(skeleton)
    depth_map = skeleton.hop_distances()
    rest = _rest_directions(skeleton)
    axes = _axis_table(skeleton)
    frames = np.arange(t, dtype=np.float64)

    order = [skeleton.center]
    seen = {skeleton.center}
    while len(order) < v:  # parents before children
        for j in range(v):
            if j not in seen and parent[j] in seen:
                order.append(j)
                seen.add(j)

    rot = np.tile(np.eye(3), (v, t, 1, 1)).reshape(v, t, 3, 3)
    pos = np.zeros((v, t, 3))
    for j in order:
        p = parent[j]
        if p < 0:
            continue
        c = chain[j]
        theta = params.amplitudes[c] * np.sin(
            2.0 * np.pi * params.frequencies[c] * frames
            + params.phases[c] + 0.9 * depth_map[j])
        if params.noise > 0.0 and rng is not None:
            theta = theta + params.noise * rng.normal(t)
        local = _rodrigues(axes[j], theta)
        rot[j] = np.matmul(rot[p], local)
        offset = rest[j] * params.bone_lengths[j]
        pos[j] = pos[p] + np.einsum("tij,j->ti", rot[j], offset)
    return np.ascontiguousarray(pos.transpose(2, 1, 0))


def gen_dataset(n: int, t: int, skeleton: SkeletonGraph, rng: Rng,
                noise: float = 0.0):
    """n sequences of t frames with per-sequence random sinusoid parameters."""
    if n < 1 or t < 1:
        raise ShapeError(f"need n >= 1 and t >= 1, got n={n} t={t}")
    seqs = []
    for _ in range(n):
        params = draw_motion_params(skeleton, rng, noise=noise)
        seqs.append(synthesize_sequence(skeleton, params, t, rng))
    return seqs


# ---------------------------------------------------------------------------
# pose-sequence files

def save_poses(path, seqs, num_joints: int) -> None:
    doc = {
        "num_joints": int(num_joints),
        "sequences": [
            {"frames": np.asarray(s).transpose(1, 2, 0).tolist()}
            for s in seqs
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_poses(path, expected_joints: int | None = None):
    """Load (3, T, V) sequences; malformed content raises DataFormatError."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(
                f"{path}: invalid JSON at line {exc.lineno}, col {exc.colno}: "
                f"{exc.msg}") from exc
    if not isinstance(doc, dict) or "num_joints" not in doc \
            or "sequences" not in doc:
        raise DataFormatError(f"{path}: missing num_joints/sequences keys")
    v = doc["num_joints"]
    if not isinstance(v, int) or v < 1:
        raise DataFormatError(f"{path}: bad num_joints {v!r}")
    if expected_joints is not None and v != expected_joints:
        raise SkeletonMismatchError(
            f"{path}: file has {v} joints, skeleton has {expected_joints}")
    seqs = []
    for si, entry in enumerate(doc["sequences"]):
        frames = entry.get("frames") if isinstance(entry, dict) else None
        if frames is None:
            raise DataFormatError(f"{path}: sequence {si} has no frames")
        arr = np.asarray(frames, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[1] != v or arr.shape[2] != 3 \
                or arr.shape[0] < 1:
            raise DataFormatError(
                f"{path}: sequence {si} has shape {arr.shape}, expected "
                f"(T, {v}, 3)")
        if not np.isfinite(arr).all():
            raise DataFormatError(f"{path}: sequence {si} has non-finite values")
        seqs.append(np.ascontiguousarray(arr.transpose(2, 0, 1)))
    return seqs


# ---------------------------------------------------------------------------
# checkpoints

def _blob_name(path) -> str:
    return os.path.basename(str(path)) + ".bin"


def save_checkpoint(path, arrays, metadata: dict) -> None:
    """Write a JSON manifest at `path` and the float64 blob next to it."""
    manifest = {
        "format_version": CHECKPOINT_VERSION,
        "metadata": metadata,
        "blob": _blob_name(path),
        "tensors": [],
    }
    offset = 0
    chunks = []
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=np.float64)
        manifest["tensors"].append({
            "name": str(name),
            "shape": [int(s) for s in arr.shape],
            "offset": offset,
            "count": int(arr.size),
        })
        chunks.append(arr.astype("<f8").tobytes())
        offset += arr.size
    with open(str(path) + ".bin", "wb") as fh:
        fh.write(b"".join(chunks))
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)


def load_checkpoint(path):
    """Read back (arrays, metadata); inconsistencies raise CheckpointError."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CheckpointError(
                f"{path}: invalid manifest JSON at line {exc.lineno}: "
                f"{exc.msg}") from exc
    version = manifest.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version!r}")
    blob_path = os.path.join(os.path.dirname(str(path)) or ".",
                             manifest["blob"])
    if not os.path.exists(blob_path):
        raise CheckpointError(f"{path}: payload blob {blob_path} is missing")
    raw = np.fromfile(blob_path, dtype="<f8")
    arrays = OrderedDict()
    for entry in manifest["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        offset, count = int(entry["offset"]), int(entry["count"])
        if int(np.prod(shape, dtype=np.int64)) != count:
            raise CheckpointError(f"{path}: {name}: shape/count mismatch")
        if offset + count > raw.size:
            raise CheckpointError(
                f"{path}: payload too short for tensor {name} "
                f"(needs {offset + count} values, blob has {raw.size})")
        arrays[name] = raw[offset:offset + count].reshape(shape).copy()
    return arrays, manifest.get("metadata", {})
