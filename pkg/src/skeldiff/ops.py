"""Differentiable operations used by the graph-convolution networks.

Feature maps are channels-first: (C, T, V) for one sequence, and batched
work stacks sequences along an extra trailing axis, giving (C, T, N, V).
Ops therefore treat axis 0 as channels, axis 1 as time where relevant, and
flatten any remaining trailing axes; the joint axis always stays last for
the adjacency contraction.  Elementwise ops broadcast the second operand
against the first by right-aligned singleton dimensions; the broadcast
operand's gradient is sum-reduced back over the expanded axes.
"""

import numpy as np

from . import kernels
from .errors import ShapeError
from .tensor import Tensor, make_result


def _coerce(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _check_broadcast(a_shape, b_shape):
    if len(b_shape) > len(a_shape):
        raise ShapeError(f"cannot broadcast {b_shape} onto {a_shape}")
    for da, db in zip(a_shape[len(a_shape) - len(b_shape):], b_shape):
        if db != 1 and db != da:
            raise ShapeError(f"cannot broadcast {b_shape} onto {a_shape}")


def _reduce_to(g, shape):
    """Sum g over the axes that were broadcast to reach g's shape."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (dg, ds) in enumerate(zip(g.shape, shape))
                 if ds == 1 and dg != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def add(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_broadcast(a.shape, b.shape)
    out = a.data + b.data

    def grad_fn(g):
        return g, _reduce_to(g, b.shape)

    return make_result(out, (a, b), grad_fn)


def sub(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_broadcast(a.shape, b.shape)
    out = a.data - b.data

    def grad_fn(g):
        return g, -_reduce_to(g, b.shape)

    return make_result(out, (a, b), grad_fn)


def mul(a, b) -> Tensor:
    a, b = _coerce(a), _coerce(b)
    _check_broadcast(a.shape, b.shape)
    out = a.data * b.data
    da, db = a.data, b.data

    def grad_fn(g):
        return g * db, _reduce_to(g * da, b.shape)

    return make_result(out, (a, b), grad_fn)


def scale(x, c: float) -> Tensor:
    """Multiply by a python constant (no gradient to the constant)."""
    x = _coerce(x)
    c = float(c)

    def grad_fn(g):
        return (g * c,)

    return make_result(x.data * c, (x,), grad_fn)


def relu(x) -> Tensor:
    x = _coerce(x)
    out = np.maximum(x.data, 0.0)

    def grad_fn(g):
        # out > 0 exactly where x > 0, so one saved array serves both passes
        return (g * (out > 0.0),)

    return make_result(out, (x,), grad_fn)


def sum_all(x) -> Tensor:
    """Sum of all elements as a scalar tensor."""
    x = _coerce(x)
    shape = x.shape

    def grad_fn(g):
        return (np.full(shape, float(g)),)

    return make_result(np.asarray(x.data.sum()), (x,), grad_fn)


def mean_abs(a, b) -> Tensor:
    """Mean absolute difference over all elements; sign subgradient, 0 at ties."""
    a, b = _coerce(a), _coerce(b)
    if a.shape != b.shape:
        raise ShapeError(f"mean_abs shapes differ: {a.shape} vs {b.shape}")
    diff = a.data - b.data
    n = diff.size
    out = np.asarray(np.abs(diff).sum() / n)

    def grad_fn(g):
        ga = (float(g) / n) * np.sign(diff)
        return ga, -ga

    return make_result(out, (a, b), grad_fn)


def concat_channels(tensors) -> Tensor:
    """Concatenate feature maps along the leading channel axis."""
    ts = [_coerce(t) for t in tensors]
    if not ts:
        raise ShapeError("concat_channels needs at least one input")
    tail = ts[0].shape[1:]
    if ts[0].ndim < 2 or any(t.shape[1:] != tail for t in ts):
        raise ShapeError(f"concat_channels mismatch: {[t.shape for t in ts]}")
    out = np.concatenate([t.data for t in ts], axis=0)
    offsets = np.cumsum([0] + [t.shape[0] for t in ts])

    def grad_fn(g):
        return tuple(
            np.ascontiguousarray(g[offsets[i]:offsets[i + 1]])
            for i in range(len(ts)))

    return make_result(out, ts, grad_fn)


def matmul_lastdim(f, a) -> Tensor:
    """Contract the trailing (joint) axis: out[..., u] = sum_v f[..., v] a[v, u]."""
    f, a = _coerce(f), _coerce(a)
    if a.ndim != 2:
        raise ShapeError(f"matrix must be 2-d, got {a.shape}")
    if f.ndim < 2 or f.shape[-1] != a.shape[0]:
        raise ShapeError(f"cannot contract {f.shape} with {a.shape}")
    v, u = a.shape
    fd, ad = f.data, a.data
    f2 = fd.reshape(-1, v)
    out = np.matmul(f2, ad).reshape(f.shape[:-1] + (u,))

    def grad_fn(g):
        g2 = g.reshape(-1, u)
        gf = np.matmul(g2, ad.T).reshape(fd.shape)
        ga = np.matmul(f2.T, g2)
        return gf, ga

    return make_result(out, (f, a), grad_fn)


def conv1x1(f, w, b=None) -> Tensor:
    """Pointwise channel mixing at every trailing position: out = w @ f (+ b)."""
    f, w = _coerce(f), _coerce(w)
    b = _coerce(b) if b is not None else None
    if f.ndim < 2 or w.ndim != 2 or f.shape[0] != w.shape[1]:
        raise ShapeError(f"conv1x1 weight {w.shape} does not fit input {f.shape}")
    if b is not None and b.shape != (w.shape[0],):
        raise ShapeError(f"conv1x1 bias {b.shape} does not fit weight {w.shape}")
    c_in, c_out = w.shape[1], w.shape[0]
    rest = f.shape[1:]
    f2 = f.data.reshape(c_in, -1)
    out = np.matmul(w.data, f2)
    if b is not None:
        out += b.data[:, None]
    wd = w.data

    def grad_fn(g):
        g2 = g.reshape(c_out, -1)
        gf = np.matmul(wd.T, g2).reshape(f.shape)
        gw = np.matmul(g2, f2.T)
        if b is None:
            return gf, gw
        return gf, gw, g2.sum(axis=1)

    parents = (f, w) if b is None else (f, w, b)
    return make_result(out.reshape((c_out,) + rest), parents, grad_fn)


def add_channel_bias(x, b) -> Tensor:
    """Add one value per leading channel, broadcast over all trailing axes."""
    x, b = _coerce(x), _coerce(b)
    if b.size != x.shape[0]:
        raise ShapeError(
            f"channel bias of size {b.size} does not fit {x.shape}")
    bshape = (x.shape[0],) + (1,) * (x.ndim - 1)
    out = x.data + b.data.reshape(bshape)

    def grad_fn(g):
        gb = g.reshape(x.shape[0], -1).sum(axis=1)
        return g, gb.reshape(b.shape)

    return make_result(out, (x, b), grad_fn)


def _flatten_trailing(x):
    """View (C, T, *rest) as (C, T, W); requires at least 2 axes."""
    if x.ndim < 2:
        raise ShapeError(f"expected (C, T, ...) feature map, got {x.shape}")
    if x.ndim == 2:
        return x.data.reshape(x.shape + (1,))
    return x.data.reshape(x.shape[:2] + (-1,))


def temporal_conv(f, w, b, dilation: int = 1) -> Tensor:
    """Temporal convolution along axis 1, independent per trailing position.

    w is (C_out, C_in, K) with K odd; symmetric zero padding of
    dilation*(K-1)/2 keeps the frame count unchanged.
    """
    f, w, b = _coerce(f), _coerce(w), _coerce(b)
    if w.ndim != 3:
        raise ShapeError(f"temporal kernel must be 3-d, got {w.shape}")
    k = w.shape[2]
    if k % 2 == 0:
        raise ShapeError(f"temporal kernel size must be odd, got {k}")
    if int(dilation) < 1:
        raise ShapeError(f"dilation must be >= 1, got {dilation}")
    f3 = _flatten_trailing(f)
    if f3.shape[0] != w.shape[1] or b.shape != (w.shape[0],):
        raise ShapeError(
            f"temporal_conv shapes: f {f.shape}, w {w.shape}, b {b.shape}")
    dilation = int(dilation)
    out = kernels.temporal_conv_forward(f3, w.data, b.data, dilation)
    out_shape = (w.shape[0],) + f.shape[1:]
    wd = w.data

    def grad_fn(g):
        g3 = np.ascontiguousarray(g.reshape(g.shape[0], f3.shape[1], -1))
        gf, gw, gb = kernels.temporal_conv_backward(f3, wd, dilation, g3)
        return gf.reshape(f.shape), gw, gb

    return make_result(out.reshape(out_shape), (f, w, b), grad_fn)


def maxpool_temporal(f, k: int = 3) -> Tensor:
    """Sliding max along axis 1 (stride 1, -inf padding); ties go to the
    first (earliest-frame) index."""
    f = _coerce(f)
    if k < 1 or k % 2 == 0:
        raise ShapeError(f"pool size must be odd and positive, got {k}")
    f3 = _flatten_trailing(f)
    out, src = kernels.maxpool_forward(f3, int(k))

    def grad_fn(g):
        g3 = np.ascontiguousarray(g.reshape(f3.shape))
        return (kernels.maxpool_backward(src, g3).reshape(f.shape),)

    return make_result(out.reshape(f.shape), (f,), grad_fn)


class BatchNormState:
    """Learnable scale/shift plus running statistics for the channel axis."""

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.9):
        self.gamma = Tensor(np.ones(channels), requires_grad=True)
        self.beta = Tensor(np.zeros(channels), requires_grad=True)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.channels = int(channels)


def batchnorm(f, state: BatchNormState, training: bool) -> Tensor:
    """Per-channel normalization over every non-channel axis.

    Training mode normalizes by the current batch statistics (biased
    variance) and updates the running stats; eval mode uses the running
    stats.  Scale and shift are learnable per channel.
    """
    f = _coerce(f)
    if f.ndim < 2 or f.shape[0] != state.channels:
        raise ShapeError(
            f"batchnorm expects {state.channels} channels first, got {f.shape}")
    fd = f.data
    f2 = fd.reshape(state.channels, -1)
    count = f2.shape[1]
    gamma, beta = state.gamma, state.beta
    if training:
        mu = f2.mean(axis=1)
        sq = np.einsum("ck,ck->c", f2, f2) / count
        var = np.maximum(sq - mu * mu, 0.0)
        m = state.momentum
        state.running_mean = m * state.running_mean + (1.0 - m) * mu
        state.running_var = m * state.running_var + (1.0 - m) * var
    else:
        mu = state.running_mean
        var = state.running_var
    ivar = 1.0 / np.sqrt(var + state.eps)
    # out = gamma * (x - mu) * ivar + beta, folded into one multiply-add
    coef = gamma.data * ivar
    shift = beta.data - mu * coef
    out = f2 * coef[:, None] + shift[:, None]

    def grad_fn(g):
        g2 = g.reshape(state.channels, -1)
        gbeta = g2.sum(axis=1)
        gdot = np.einsum("ck,ck->c", g2, f2)
        ggamma = (gdot - mu * gbeta) * ivar  # = sum(g * xhat)
        if training:
            # gf = coef * (g - mean(g) - xhat * mean(g * xhat))
            a1 = gbeta / count
            a2 = ggamma / count * ivar
            gf = coef[:, None] * (g2 - a1[:, None]
                                  - (f2 - mu[:, None]) * a2[:, None])
        else:
            gf = g2 * coef[:, None]
        return gf.reshape(f.shape), ggamma, gbeta

    return make_result(out.reshape(f.shape), (f, gamma, beta), grad_fn)
