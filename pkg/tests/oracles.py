"""Naive loop implementations used as independent references in tests.

Everything here is deliberately written with plain python loops over
(C, T, V) arrays and shares no code with the library kernels.
"""

import numpy as np


def matmul_lastdim_oracle(f, a):
    c, t, v = f.shape
    u = a.shape[1]
    out = np.zeros((c, t, u))
    for ci in range(c):
        for ti in range(t):
            for ui in range(u):
                s = 0.0
                for vi in range(v):
                    s += f[ci, ti, vi] * a[vi, ui]
                out[ci, ti, ui] = s
    return out


def conv1x1_oracle(f, w, b=None):
    c_in, t, v = f.shape
    c_out = w.shape[0]
    out = np.zeros((c_out, t, v))
    for o in range(c_out):
        for ti in range(t):
            for vi in range(v):
                s = 0.0 if b is None else b[o]
                for ci in range(c_in):
                    s += w[o, ci] * f[ci, ti, vi]
                out[o, ti, vi] = s
    return out


def temporal_conv_oracle(f, w, b, dilation):
    c_in, t, v = f.shape
    c_out, _, k = w.shape
    half = (k - 1) // 2
    out = np.zeros((c_out, t, v))
    for o in range(c_out):
        for ti in range(t):
            for vi in range(v):
                s = b[o]
                for ci in range(c_in):
                    for j in range(k):
                        src = ti + (j - half) * dilation
                        if 0 <= src < t:
                            s += w[o, ci, j] * f[ci, src, vi]
                out[o, ti, vi] = s
    return out


def maxpool_oracle(f, k):
    c, t, v = f.shape
    half = (k - 1) // 2
    out = np.empty((c, t, v))
    for ci in range(c):
        for ti in range(t):
            for vi in range(v):
                best = -np.inf
                for j in range(k):
                    src = ti + j - half
                    if 0 <= src < t and f[ci, src, vi] > best:
                        best = f[ci, src, vi]
                out[ci, ti, vi] = best
    return out


def spatial_oracle(f, mats, weights, bias):
    """sum_k (f . A_k) W_k + bias over the three partition matrices."""
    c_in, t, v = f.shape
    c_out = weights[0].shape[0]
    out = np.zeros((c_out, t, v))
    for a, w in zip(mats, weights):
        agg = matmul_lastdim_oracle(f, a)
        for o in range(c_out):
            for ti in range(t):
                for vi in range(v):
                    s = 0.0
                    for ci in range(c_in):
                        s += w[o, ci] * agg[ci, ti, vi]
                    out[o, ti, vi] += s
    for o in range(c_out):
        out[o] += bias[o]
    return out


def mpjpe_oracle(gen, gt, masked_frames):
    total, count = 0.0, 0
    for t in masked_frames:
        for v in range(gen.shape[2]):
            d = 0.0
            for c in range(gen.shape[0]):
                d += (gen[c, t, v] - gt[c, t, v]) ** 2
            total += np.sqrt(d)
            count += 1
    return total / count
