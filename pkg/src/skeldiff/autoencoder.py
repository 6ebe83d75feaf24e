"""Graph-convolutional autoencoder over pose sequences.

The encoder lifts the 3 coordinate channels pointwise to the first hidden
width, batch-normalizes, and runs three graph blocks up the channel ladder
to the latent width; the decoder runs the ladder back down and projects to
coordinates.  Training minimizes mean absolute reconstruction error.
"""

import numpy as np

from . import ops
from .config import RunConfig
from .errors import NonFiniteError, ShapeError, SkeletonMismatchError
from .graph import PartitionedAdjacency, SkeletonGraph
from .optim import Adam, decayed_lr
from .rng import Rng
from .stgcn import PointwiseConv, BatchNorm, StGcnBlock, StGcnConfig
from .tensor import Tensor, no_grad

LATENT_CHANNELS = 128


class Autoencoder:
    def __init__(self, skeleton: SkeletonGraph, config: RunConfig, rng: Rng):
        self.skeleton = skeleton
        self.adjacency = PartitionedAdjacency.build(skeleton)
        self.config = config
        ladder = config.encoder_channels
        kc = dict(k_t=config.temporal_kernel, dilation=config.dilation)
        self.lift = PointwiseConv(3, ladder[0], rng)
        self.lift_bn = BatchNorm(ladder[0])
        self.enc_blocks = [
            StGcnBlock(StGcnConfig(ladder[i], ladder[i + 1], **kc), rng)
            for i in range(len(ladder) - 1)
        ]
        down = list(reversed(ladder))  # e.g. 128 -> 64 -> 16, then 16 -> 16
        self.dec_blocks = [
            StGcnBlock(StGcnConfig(down[0], down[1], **kc), rng),
            StGcnBlock(StGcnConfig(down[1], down[2], **kc), rng),
            StGcnBlock(StGcnConfig(down[2], down[2], **kc), rng),
        ]
        self.head = PointwiseConv(down[2], 3, rng)

    def _check_joints(self, x):
        v = x.shape[-1]
        if v != self.skeleton.num_joints:
            raise SkeletonMismatchError(
                f"sequence has {v} joints, model expects "
                f"{self.skeleton.num_joints}")

    def encode(self, x, training: bool = False) -> Tensor:
        """(3,T,V) or (N,3,T,V) poses -> latent feature map."""
        x = x if isinstance(x, Tensor) else Tensor(np.asarray(x, np.float64))
        self._check_joints(x)
        h = self.lift_bn(self.lift(x), training)
        for block in self.enc_blocks:
            h = block(h, self.adjacency, training)
        return h

    def decode(self, z, training: bool = False) -> Tensor:
        z = z if isinstance(z, Tensor) else Tensor(np.asarray(z, np.float64))
        self._check_joints(z)
        h = z
        for block in self.dec_blocks:
            h = block(h, self.adjacency, training)
        return self.head(h)

    def reconstruct(self, x, training: bool = False) -> Tensor:
        return self.decode(self.encode(x, training), training)

    def parameters(self):
        params = self.lift.parameters() + self.lift_bn.parameters()
        for block in self.enc_blocks + self.dec_blocks:
            params += block.parameters()
        return params + self.head.parameters()

    def state_items(self):
        yield from self.lift.state_items("ae.lift")
        yield from self.lift_bn.state_items("ae.lift_bn")
        for i, block in enumerate(self.enc_blocks):
            yield from block.state_items(f"ae.enc{i}")
        for i, block in enumerate(self.dec_blocks):
            yield from block.state_items(f"ae.dec{i}")
        yield from self.head.state_items("ae.head")


def reconstruction_loss(x, x_hat) -> Tensor:
    """Mean absolute error over every coordinate of the sequence."""
    return ops.mean_abs(x_hat, x)


def normalize_pose(x: np.ndarray, skeleton: SkeletonGraph,
                   observed=None) -> tuple[np.ndarray, np.ndarray, float]:
    """Translate so the center joint of frame 0 sits at the origin and
    divide by the mean bone length.

    Returns (normalized, offset, scale); statistics use only `observed`
    frames when given so masked values never leak in.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != 3:
        raise ShapeError(f"expected (3,T,V), got {x.shape}")
    if x.shape[2] != skeleton.num_joints:
        raise SkeletonMismatchError(
            f"sequence has {x.shape[2]} joints, skeleton has "
            f"{skeleton.num_joints}")
    offset = x[:, 0, skeleton.center].copy()
    frames = np.arange(x.shape[1]) if observed is None else np.asarray(observed)
    lengths = [
        np.linalg.norm(x[:, frames, i] - x[:, frames, j], axis=0).mean()
        for i, j in sorted(skeleton.edges)
    ]
    scale = float(np.mean(lengths)) if lengths else 1.0
    if scale <= 1e-12:
        scale = 1.0
    return (x - offset[:, None, None]) / scale, offset, scale


def denormalize_pose(x: np.ndarray, offset: np.ndarray, scale: float) -> np.ndarray:
    return np.asarray(x) * scale + offset[:, None, None]


def center_pose_baseline_mae(dataset) -> float:
    """MAE of predicting each sequence's temporal-mean pose for every frame."""
    total, count = 0.0, 0
    for x in dataset:
        x = np.asarray(x, dtype=np.float64)
        center = x.mean(axis=1, keepdims=True)
        total += np.abs(x - center).sum()
        count += x.size
    return total / count


def _fit_length(x: np.ndarray, t_batch: int):
    """Crop or pad (repeat last frame) to t_batch; weight 0 marks padding."""
    t = x.shape[1]
    w = np.ones(t_batch)
    if t == t_batch:
        return x, w
    if t > t_batch:
        return x[:, :t_batch, :], w
    pad = np.repeat(x[:, -1:, :], t_batch - t, axis=1)
    w[t:] = 0.0
    return np.concatenate([x, pad], axis=1), w


def prepare_batch(seqs, t_batch: int):
    """Stack sequences along a trailing batch axis: (3, T, N, V) plus the
    per-frame validity weights (T, N)."""
    stacked, weights = [], []
    for x in seqs:
        fitted, w = _fit_length(np.asarray(x, dtype=np.float64), t_batch)
        stacked.append(fitted)
        weights.append(w)
    return np.stack(stacked, axis=2), np.stack(weights, axis=1)


def batch_loss(model: Autoencoder, batch: np.ndarray, weights: np.ndarray,
               training: bool) -> Tensor:
    x = Tensor(batch)
    x_hat = model.reconstruct(x, training)
    if np.all(weights == 1.0):
        return reconstruction_loss(x, x_hat)
    diff = ops.sub(x_hat, x)
    absdiff = ops.add(ops.relu(diff), ops.relu(ops.scale(diff, -1.0)))
    w = Tensor(weights[None, :, :, None])
    valid = float(weights.sum()) * batch.shape[0] * batch.shape[3]
    return ops.scale(ops.sum_all(ops.mul(absdiff, w)), 1.0 / valid)


def pretrain(dataset, model: Autoencoder, config: RunConfig, rng: Rng,
             epochs: int | None = None):
    """Reconstruction training; returns the per-epoch mean loss curve."""
    if not dataset:
        raise ShapeError("pretrain needs a non-empty dataset")
    epochs = config.pretrain_epochs if epochs is None else epochs
    data = [normalize_pose(x, model.skeleton)[0] for x in dataset]
    opt = Adam(model.parameters(), lr=config.lr)
    curve = []
    n = len(data)
    # one seeded shuffle; fixed batch groups keep every epoch's batch
    # statistics comparable, so the loss curve tracks the parameters only
    order = rng.permutation(n)
    for epoch in range(epochs):
        opt.set_lr(decayed_lr(config.lr, epoch, epochs))
        total, seen = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch, weights = prepare_batch([data[i] for i in idx],
                                           config.batch_frames)
            try:
                loss = batch_loss(model, batch, weights, training=True)
            except NonFiniteError as exc:
                raise NonFiniteError(
                    f"pretraining diverged at epoch {epoch}, "
                    f"batch {start // config.batch_size}: {exc}") from exc
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
            seen += len(idx)
        curve.append(total / seen)
    return curve


def eval_reconstruction_mae(model: Autoencoder, dataset) -> float:
    """Eval-mode reconstruction MAE over normalized sequences."""
    total, count = 0.0, 0
    with no_grad():
        for x in dataset:
            xn = normalize_pose(x, model.skeleton)[0]
            x_hat = model.reconstruct(Tensor(xn), training=False)
            total += np.abs(x_hat.data - xn).sum()
            count += xn.size
    return total / count
