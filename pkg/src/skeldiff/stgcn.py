"""Spatial-temporal graph convolution block and its small layer wrappers.

The block aggregates joint features through the three partition adjacency
matrices with one channel-mixing weight per partition, normalizes and
rectifies, runs a four-branch multi-scale temporal stage (pointwise,
k-tap, dilated k-tap, max-pool) whose outputs concatenate back to the full
channel count, then adds the (possibly projected) input as a residual.
"""

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import ops
from .errors import ShapeError
from .graph import PartitionedAdjacency
from .rng import Rng
from .tensor import Tensor

NUM_SPATIAL_KERNELS = 3


def he_weights(rng: Rng, shape, fan_in: int) -> np.ndarray:
    """Scaled-normal init for relu stacks."""
    return rng.normal(shape) * np.sqrt(2.0 / fan_in)


class PointwiseConv:
    """1x1 channel mixing; weight (c_out, c_in), optional bias (c_out,)."""

    def __init__(self, c_in: int, c_out: int, rng: Rng, bias: bool = True):
        self.w = Tensor(he_weights(rng, (c_out, c_in), c_in), requires_grad=True)
        self.b = Tensor(np.zeros(c_out), requires_grad=True) if bias else None

    def __call__(self, x) -> Tensor:
        return ops.conv1x1(x, self.w, self.b)

    def parameters(self):
        return [self.w] if self.b is None else [self.w, self.b]

    def state_items(self, prefix):
        yield prefix + ".w", self.w
        if self.b is not None:
            yield prefix + ".b", self.b


class TimeConv:
    """k-tap per-joint temporal convolution, channels preserved."""

    def __init__(self, channels: int, k: int, dilation: int, rng: Rng):
        self.dilation = int(dilation)
        self.w = Tensor(he_weights(rng, (channels, channels, k), channels * k),
                        requires_grad=True)
        self.b = Tensor(np.zeros(channels), requires_grad=True)

    def __call__(self, x) -> Tensor:
        return ops.temporal_conv(x, self.w, self.b, self.dilation)

    def parameters(self):
        return [self.w, self.b]

    def state_items(self, prefix):
        yield prefix + ".w", self.w
        yield prefix + ".b", self.b


class BatchNorm:
    def __init__(self, channels: int):
        self.state = ops.BatchNormState(channels)

    def __call__(self, x, training: bool) -> Tensor:
        return ops.batchnorm(x, self.state, training)

    def parameters(self):
        return [self.state.gamma, self.state.beta]

    def state_items(self, prefix):
        yield prefix + ".gamma", self.state.gamma
        yield prefix + ".beta", self.state.beta
        yield prefix + ".running_mean", self.state
        yield prefix + ".running_var", self.state


@dataclass(frozen=True)
class StGcnConfig:
    c_in: int
    c_out: int
    k_t: int = 7
    dilation: int = 2

    def __post_init__(self):
        if self.c_out % 4 != 0:
            raise ShapeError(f"c_out must be divisible by 4, got {self.c_out}")
        if self.k_t % 2 == 0 or self.k_t < 1:
            raise ShapeError(f"k_t must be odd and positive, got {self.k_t}")
        if self.dilation < 1:
            raise ShapeError(f"dilation must be >= 1, got {self.dilation}")


class StGcnBlock:
    def __init__(self, config: StGcnConfig, rng: Rng):
        self.config = config
        c_in, c_out = config.c_in, config.c_out
        branch = c_out // 4
        # one weight per partition, stored stacked column-wise so the whole
        # spatial mix runs as a single channel contraction
        self.spatial_w = Tensor(
            he_weights(rng, (c_out, NUM_SPATIAL_KERNELS * c_in), c_in),
            requires_grad=True)
        self.spatial_b = Tensor(np.zeros(c_out), requires_grad=True)
        self.bn_spatial = BatchNorm(c_out)
        self.branch_in = [PointwiseConv(c_out, branch, rng) for _ in range(4)]
        self.tconv_a = TimeConv(branch, config.k_t, 1, rng)
        self.tconv_b = TimeConv(branch, config.k_t, config.dilation, rng)
        self.bn_out = BatchNorm(c_out)
        self.residual = None if c_in == c_out else PointwiseConv(c_in, c_out, rng)

    def partition_weights(self):
        """The per-partition channel-mixing weights, as views of the stack."""
        c_in = self.config.c_in
        return [self.spatial_w.data[:, i * c_in:(i + 1) * c_in]
                for i in range(NUM_SPATIAL_KERNELS)]

    def spatial_conv(self, x, adj: PartitionedAdjacency) -> Tensor:
        """Partition-wise joint aggregation followed by channel mixing."""
        gathered = ops.concat_channels(
            [ops.matmul_lastdim(x, Tensor(a)) for a in adj.matrices])
        return ops.add_channel_bias(
            ops.conv1x1(gathered, self.spatial_w), self.spatial_b)

    def spatial(self, x, adj, training: bool) -> Tensor:
        return ops.relu(self.bn_spatial(self.spatial_conv(x, adj), training))

    def tcn(self, x) -> Tensor:
        """Four parallel temporal branches, concatenated back to c_out."""
        b1 = self.branch_in[0](x)
        b2 = self.tconv_a(self.branch_in[1](x))
        b3 = self.tconv_b(self.branch_in[2](x))
        b4 = ops.maxpool_temporal(self.branch_in[3](x), 3)
        return ops.concat_channels([b1, b2, b3, b4])

    def forward(self, x, adj, training: bool) -> Tensor:
        s = self.spatial(x, adj, training)
        t = ops.relu(self.bn_out(self.tcn(s), training))
        res = x if self.residual is None else self.residual(x)
        return ops.add(t, res)

    __call__ = forward

    def parameters(self):
        params = [self.spatial_w, self.spatial_b]
        params += self.bn_spatial.parameters()
        for conv in self.branch_in:
            params += conv.parameters()
        params += self.tconv_a.parameters() + self.tconv_b.parameters()
        params += self.bn_out.parameters()
        if self.residual is not None:
            params += self.residual.parameters()
        return params

    def state_items(self, prefix):
        yield f"{prefix}.spatial_w", self.spatial_w
        yield f"{prefix}.spatial_b", self.spatial_b
        yield from self.bn_spatial.state_items(prefix + ".bn_spatial")
        for i, conv in enumerate(self.branch_in):
            yield from conv.state_items(f"{prefix}.branch{i}")
        yield from self.tconv_a.state_items(prefix + ".tconv_a")
        yield from self.tconv_b.state_items(prefix + ".tconv_b")
        yield from self.bn_out.state_items(prefix + ".bn_out")
        if self.residual is not None:
            yield from self.residual.state_items(prefix + ".residual")


def collect_state(items) -> "OrderedDict[str, np.ndarray]":
    """Materialize state_items() into name -> array (params and BN buffers)."""
    out = OrderedDict()
    for name, obj in items:
        if isinstance(obj, Tensor):
            out[name] = obj.data.copy()
        else:  # BatchNormState buffer, name ends in the buffer field
            field = name.rsplit(".", 1)[1]
            out[name] = getattr(obj, field).copy()
    return out


def load_state(items, arrays) -> None:
    """Assign arrays back into parameters/buffers, checking names and shapes."""
    for name, obj in items:
        if name not in arrays:
            raise KeyError(name)
        value = np.asarray(arrays[name], dtype=np.float64)
        if isinstance(obj, Tensor):
            if value.shape != obj.data.shape:
                raise ShapeError(
                    f"{name}: shape {value.shape} != {obj.data.shape}")
            obj.data = np.ascontiguousarray(value)
        else:
            field = name.rsplit(".", 1)[1]
            current = getattr(obj, field)
            if value.shape != current.shape:
                raise ShapeError(
                    f"{name}: shape {value.shape} != {current.shape}")
            setattr(obj, field, np.ascontiguousarray(value))
