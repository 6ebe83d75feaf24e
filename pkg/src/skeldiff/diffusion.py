"""Conditional latent diffusion over encoded pose sequences.

Clean latents are corrupted as z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) e.
The denoiser predicts z0 directly from the noisy latent concatenated with a
time-conditioned copy of the masked-context latent, and re-injects the raw
context latent through a final residual.  Sampling walks a short descending
timestep subsequence: each step predicts z0, then re-noises it to the next
timestep using the noise recovered from the current state (a deterministic
update; a stochastic variant redraws the noise instead).
"""

import numpy as np

from . import ops
from .autoencoder import Autoencoder, denormalize_pose, normalize_pose
from .config import RunConfig
from .errors import MaskError, NonFiniteError, ShapeError
from .masking import MaskSpec, fill, random_mask
from .optim import Adam, decayed_lr
from .rng import Rng
from .stgcn import PointwiseConv, StGcnBlock, StGcnConfig, he_weights
from .tensor import Tensor, no_grad


class NoiseSchedule:
    """Linear beta ramp; alpha_bar[t] = prod_{s<=t} (1 - beta_s), abar[0] = 1."""

    def __init__(self, num_steps: int = 1000, beta_start: float = 1e-4,
                 beta_end: float = 2e-2):
        if num_steps < 1:
            raise ShapeError(f"need at least one step, got {num_steps}")
        self.num_steps = int(num_steps)
        if num_steps == 1:
            self.beta = np.array([beta_start])
        else:
            self.beta = np.linspace(beta_start, beta_end, num_steps)
        self.alpha_bar = np.concatenate(
            [[1.0], np.cumprod(1.0 - self.beta)])

    def check_t(self, t: int):
        if not 1 <= t <= self.num_steps:
            raise ShapeError(
                f"timestep {t} outside [1, {self.num_steps}]")


def make_schedule(num_steps: int = 1000, beta_start: float = 1e-4,
                  beta_end: float = 2e-2) -> NoiseSchedule:
    return NoiseSchedule(num_steps, beta_start, beta_end)


def forward_diffuse(z0: np.ndarray, t: int, sched: NoiseSchedule, rng: Rng):
    """Corrupt a clean latent to timestep t; returns (z_t, noise)."""
    sched.check_t(t)
    z0 = np.asarray(z0, dtype=np.float64)
    eps = rng.normal(z0.shape)
    abar = sched.alpha_bar[t]
    return np.sqrt(abar) * z0 + np.sqrt(1.0 - abar) * eps, eps


def sinusoidal_embedding(t: int, dim: int) -> np.ndarray:
    """Classic sin/cos features of the timestep index."""
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    ang = t * freqs
    return np.concatenate([np.sin(ang), np.cos(ang)])


class TimeEmbedding:
    """sinusoidal(dim) -> linear -> relu -> linear, emitting a channel bias."""

    def __init__(self, dim: int, rng: Rng):
        self.dim = int(dim)
        self.w1 = Tensor(he_weights(rng, (dim, dim), dim), requires_grad=True)
        self.b1 = Tensor(np.zeros(dim), requires_grad=True)
        self.w2 = Tensor(he_weights(rng, (dim, dim), dim), requires_grad=True)
        self.b2 = Tensor(np.zeros(dim), requires_grad=True)

    def __call__(self, t: int) -> Tensor:
        """One bias value per latent channel, as a (dim, 1) map."""
        feats = Tensor(sinusoidal_embedding(t, self.dim).reshape(self.dim, 1))
        h = ops.relu(ops.conv1x1(feats, self.w1, self.b1))
        return ops.conv1x1(h, self.w2, self.b2)

    def parameters(self):
        return [self.w1, self.b1, self.w2, self.b2]

    def state_items(self, prefix):
        yield prefix + ".w1", self.w1
        yield prefix + ".b1", self.b1
        yield prefix + ".w2", self.w2
        yield prefix + ".b2", self.b2


class Denoiser:
    """Projection of [noisy, conditioned-context] through two graph blocks,
    plus the raw context latent on the output residual."""

    def __init__(self, skeleton, config: RunConfig, rng: Rng):
        self.config = config
        latent = config.encoder_channels[-1]
        widths = config.denoiser_channels  # projection, block1, block2 outputs
        from .graph import PartitionedAdjacency
        self.adjacency = PartitionedAdjacency.build(skeleton)
        kc = dict(k_t=config.temporal_kernel, dilation=config.dilation)
        self.time_mlp = TimeEmbedding(latent, rng)
        self.proj = PointwiseConv(2 * latent, widths[0], rng)
        self.block1 = StGcnBlock(StGcnConfig(widths[0], widths[1], **kc), rng)
        self.block2 = StGcnBlock(StGcnConfig(widths[1], widths[2], **kc), rng)
        if widths[2] != latent:
            raise ShapeError(
                f"denoiser must end at the latent width {latent}, "
                f"got {widths[2]}")

    def condition(self, cond_latent: Tensor, t: int) -> Tensor:
        """Add the time-embedding bias onto the context latent, broadcast
        over frames and joints."""
        return ops.add_channel_bias(cond_latent, self.time_mlp(t))

    def predict(self, z_t: Tensor, t: int, cond_latent: Tensor,
                training: bool = False) -> Tensor:
        """Predict the clean latent from z_t and the context latent."""
        cond_t = self.condition(cond_latent, t)
        h = ops.concat_channels([z_t, cond_t])
        h = self.proj(h)
        h = self.block1(h, self.adjacency, training)
        h = self.block2(h, self.adjacency, training)
        return ops.add(h, cond_latent)

    def parameters(self):
        return (self.time_mlp.parameters() + self.proj.parameters()
                + self.block1.parameters() + self.block2.parameters())

    def state_items(self):
        yield from self.time_mlp.state_items("dn.time")
        yield from self.proj.state_items("dn.proj")
        yield from self.block1.state_items("dn.block1")
        yield from self.block2.state_items("dn.block2")

    def zero_all_weights(self):
        """Zero every parameter (used to verify the residual identity)."""
        for p in self.parameters():
            p.data[...] = 0.0


def train_step(x0, ae: Autoencoder, denoiser: Denoiser, sched: NoiseSchedule,
               opt: Adam, config: RunConfig, rng: Rng) -> float:
    """One optimization step on a sequence (3,T,V) or a list of them
    (stacked along a trailing batch axis).

    Draw order for reproducibility: per-sequence mask spans, then one shared
    timestep, then the corruption noise.
    """
    seqs = [np.asarray(x, dtype=np.float64) for x in x0] \
        if isinstance(x0, (list, tuple)) else [np.asarray(x0, np.float64)]
    t_frames = seqs[0].shape[1]
    span = (config.span_min, config.span_max)
    masked_seqs = []
    for x in seqs:
        mask = random_mask(t_frames, config.mask_ratio, rng, span)
        masked_seqs.append(fill(x, mask, config.fill_mode))
    t = int(rng.integers(1, sched.num_steps + 1))
    if len(seqs) == 1:
        clean, context = seqs[0], masked_seqs[0]
    else:
        clean = np.stack(seqs, axis=2)
        context = np.stack(masked_seqs, axis=2)
    with no_grad():
        z0 = ae.encode(Tensor(clean), training=False).data
        cond = ae.encode(Tensor(context), training=False).data
    z_t, _ = forward_diffuse(z0, t, sched, rng)
    pred = denoiser.predict(Tensor(z_t), t, Tensor(cond), training=True)
    loss = ops.mean_abs(Tensor(z0), pred)
    opt.zero_grad()
    loss.backward()
    opt.step()
    return loss.item()


def train(dataset, ae: Autoencoder, denoiser: Denoiser, sched: NoiseSchedule,
          config: RunConfig, rng: Rng, epochs: int | None = None):
    """Denoiser training over normalized sequences; encoder stays frozen.

    Returns the per-epoch mean loss curve.
    """
    if not dataset:
        raise ShapeError("train needs a non-empty dataset")
    epochs = config.train_epochs if epochs is None else epochs
    data = [normalize_pose(x, ae.skeleton)[0] for x in dataset]
    opt = Adam(denoiser.parameters(), lr=config.lr)
    n = len(data)
    curve = []
    order = rng.permutation(n)  # fixed batch groups, as in pretraining
    for epoch in range(epochs):
        opt.set_lr(decayed_lr(config.lr, epoch, epochs))
        total, seen = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = [data[i] for i in idx]
            try:
                loss = train_step(batch, ae, denoiser, sched, opt, config, rng)
            except NonFiniteError as exc:
                raise NonFiniteError(
                    f"diffusion training diverged at epoch {epoch}, "
                    f"batch {start // config.batch_size}: {exc}") from exc
            total += loss * len(idx)
            seen += len(idx)
        curve.append(total / seen)
    return curve


class SamplerConfig:
    """Descending timestep subsequence for few-step inference."""

    def __init__(self, num_steps: int = 5, stochastic: bool = False):
        if num_steps < 1:
            raise ShapeError(f"need at least one inference step, got {num_steps}")
        self.num_steps = int(num_steps)
        self.stochastic = bool(stochastic)

    def timesteps(self, t_diff: int):
        """Evenly spaced, strictly decreasing, starting at t_diff."""
        i = self.num_steps
        ts = [int(round(t_diff * (i - j) / i)) for j in range(i)]
        return [t for t in ts if t >= 1]


def sample_latent(shape, cond: Tensor, denoiser: Denoiser,
                  sched: NoiseSchedule, cfg: SamplerConfig, rng: Rng) -> np.ndarray:
    """Run the reverse process from pure noise, conditioned on `cond`."""
    z = rng.normal(shape)
    steps = cfg.timesteps(sched.num_steps)
    with no_grad():
        for j, t in enumerate(steps):
            pred = denoiser.predict(Tensor(z), t, cond, training=False).data
            t_next = steps[j + 1] if j + 1 < len(steps) else 0
            if t_next == 0:
                z = pred
                break
            abar_t = sched.alpha_bar[t]
            abar_n = sched.alpha_bar[t_next]
            if cfg.stochastic:
                eps = rng.normal(shape)
            else:
                eps = (z - np.sqrt(abar_t) * pred) / np.sqrt(1.0 - abar_t)
            z = np.sqrt(abar_n) * pred + np.sqrt(1.0 - abar_n) * eps
    return z


def inpaint(x: np.ndarray, mask: MaskSpec, ae: Autoencoder,
            denoiser: Denoiser, sched: NoiseSchedule, cfg: SamplerConfig,
            rng: Rng, fill_mode: str = "interp") -> np.ndarray:
    """Replace the masked frames of x; observed frames pass through verbatim.

    Masked values of x are never read: the context is interpolation-filled
    from observed anchors, encoded, and used to condition the sampler.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[1] != mask.total_frames:
        raise ShapeError(
            f"expected (C,{mask.total_frames},V) sequence, got {x.shape}")
    if not mask.masked:
        raise MaskError("inpaint needs at least one masked frame")
    context = fill(x, mask, fill_mode)
    observed = list(mask.observed)
    ctx_norm, offset, scl = normalize_pose(context, ae.skeleton,
                                           observed=observed)
    with no_grad():
        cond = ae.encode(Tensor(ctx_norm), training=False)
        z0 = sample_latent(cond.shape, cond, denoiser, sched, cfg, rng)
        decoded = ae.decode(Tensor(z0), training=False).data
    restored = denormalize_pose(decoded, offset, scl)
    out = x.copy()
    out[:, list(mask.masked), :] = restored[:, list(mask.masked), :]
    return out


def sample_transitions(pre: np.ndarray, post: np.ndarray, n_trans: int,
                       ae: Autoencoder, denoiser: Denoiser,
                       sched: NoiseSchedule, cfg: SamplerConfig,
                       rng: Rng) -> np.ndarray:
    """Bridge two observed segments with n_trans synthesized frames."""
    pre = np.asarray(pre, dtype=np.float64)
    post = np.asarray(post, dtype=np.float64)
    if n_trans < 1:
        raise ShapeError(f"need at least one transition frame, got {n_trans}")
    if pre.ndim != 3 or post.ndim != 3 or pre.shape[1] < 1 or post.shape[1] < 1:
        raise ShapeError("pre/post must be non-empty (3,T,V) sequences")
    if pre.shape[0] != post.shape[0] or pre.shape[2] != post.shape[2]:
        raise ShapeError(
            f"segment shapes disagree: {pre.shape} vs {post.shape}")
    t_pre, t_post = pre.shape[1], post.shape[1]
    gap = np.zeros((pre.shape[0], n_trans, pre.shape[2]))
    full = np.concatenate([pre, gap, post], axis=1)
    mask = MaskSpec(t_pre + n_trans + t_post,
                    tuple(range(t_pre, t_pre + n_trans)))
    return inpaint(full, mask, ae, denoiser, sched, cfg, rng)
