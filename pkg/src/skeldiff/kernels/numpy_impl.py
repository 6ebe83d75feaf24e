"""Pure-numpy kernels: the fallback path and the reference semantics.

Same contracts as the numba backend: feature maps are channels-first
(C, T, W).  The temporal stencil is an im2col gather (vectorized slice
copies) followed by one BLAS matmul; the sliding max uses a stacked-window
argmax.
"""

import numpy as np

NAME = "numpy"


def _gather_columns(f, k, dilation):
    """cols[c, j, t, w] = f[c, t + (j - half)*dilation, w], zero outside."""
    c_in, t, vv = f.shape
    half = (k - 1) // 2
    cols = np.zeros((c_in, k, t, vv), dtype=f.dtype)
    for j in range(k):
        shift = (j - half) * dilation
        lo, hi = max(0, -shift), min(t, t - shift)
        if hi > lo:
            cols[:, j, lo:hi, :] = f[:, lo + shift:hi + shift, :]
    return cols


def temporal_conv_forward(f, w, b, dilation):
    c_in, t, vv = f.shape
    c_out, _, k = w.shape
    cols = _gather_columns(f, k, dilation).reshape(c_in * k, t * vv)
    out = np.matmul(w.reshape(c_out, c_in * k), cols)
    out += b[:, None]
    return out.reshape(c_out, t, vv)


def temporal_conv_backward(f, w, dilation, gout):
    c_in, t, vv = f.shape
    c_out, _, k = w.shape
    half = (k - 1) // 2
    cols = _gather_columns(f, k, dilation).reshape(c_in * k, t * vv)
    g2 = gout.reshape(c_out, t * vv)
    gw = np.matmul(g2, cols.T).reshape(c_out, c_in, k)
    gcols = np.matmul(w.reshape(c_out, c_in * k).T, g2)
    gcols = gcols.reshape(c_in, k, t, vv)
    gf = np.zeros_like(f)
    for j in range(k):
        shift = (j - half) * dilation
        lo, hi = max(0, -shift), min(t, t - shift)
        if hi > lo:
            gf[:, lo + shift:hi + shift, :] += gcols[:, j, lo:hi, :]
    gb = g2.sum(axis=1)
    return gf, gw, gb


def maxpool_forward(f, k):
    # stride 1, -inf padding: real data always wins; argmax keeps the first
    # (lowest source index) maximum in each window.
    c, t, vv = f.shape
    pad = (k - 1) // 2
    fp = np.full((c, t + 2 * pad, vv), -np.inf, dtype=f.dtype)
    fp[:, pad:pad + t, :] = f
    windows = np.stack([fp[:, j:j + t, :] for j in range(k)], axis=0)
    off = windows.argmax(axis=0)
    out = np.take_along_axis(windows, off[None], axis=0)[0]
    src = off + np.arange(t).reshape(1, t, 1) - pad
    return np.ascontiguousarray(out), src.astype(np.int64)


def maxpool_backward(src, gout):
    gf = np.zeros_like(gout)
    c, t, vv = gout.shape
    ci, _, vi = np.indices((c, 1, vv), sparse=True)
    np.add.at(gf, (ci, src, vi), gout)
    return gf


def dtw_accumulate(cost):
    """Accumulated alignment cost with steps (1,0), (0,1), (1,1)."""
    ta, tb = cost.shape
    d = np.empty((ta, tb), dtype=cost.dtype)
    d[0, 0] = cost[0, 0]
    for i in range(1, ta):
        d[i, 0] = d[i - 1, 0] + cost[i, 0]
    for j in range(1, tb):
        d[0, j] = d[0, j - 1] + cost[0, j]
    for i in range(1, ta):
        row = d[i]
        prev = d[i - 1]
        for j in range(1, tb):
            row[j] = cost[i, j] + min(prev[j], row[j - 1], prev[j - 1])
    return float(d[ta - 1, tb - 1])
