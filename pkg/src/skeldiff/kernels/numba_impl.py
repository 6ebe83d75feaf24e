"""numba @njit kernels for the hot inner loops.

Feature maps arrive channels-first as (C, T, W) with all trailing axes
flattened into W, so shifting one frame is a constant offset of W in the
flat (T*W) block.  The temporal convolution gathers shifted rows into a
column buffer with tight loops and hands the contraction to one BLAS dot;
fastmath stays off so summation order is fixed.
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _gather(f2, cols, t, vv, k, dilation):
    # cols[ci*k + j] = f2[ci] shifted by (j - half)*dilation frames, zero pad
    c_in = f2.shape[0]
    half = (k - 1) // 2
    tw = t * vv
    for ci in range(c_in):
        src = f2[ci]
        for j in range(k):
            row = cols[ci * k + j]
            shift = (j - half) * dilation
            lo = (-shift if shift < 0 else 0) * vv
            hi = ((t - shift) if shift > 0 else t) * vv
            if hi < lo:
                hi = lo
            off = shift * vv
            for idx in range(0, lo):
                row[idx] = 0.0
            for idx in range(hi, tw):
                row[idx] = 0.0
            for idx in range(lo, hi):
                row[idx] = src[idx + off]


@njit(cache=True)
def temporal_conv_forward(f, w, b, dilation):
    c_in, t, vv = f.shape
    c_out, _, k = w.shape
    tw = t * vv
    f2 = f.reshape(c_in, tw)
    w2 = np.ascontiguousarray(w.reshape(c_out, c_in * k))
    cols = np.empty((c_in * k, tw), dtype=f.dtype)
    _gather(f2, cols, t, vv, k, dilation)
    out = np.dot(w2, cols)
    for o in range(c_out):
        bias = b[o]
        row = out[o]
        for idx in range(tw):
            row[idx] += bias
    return out.reshape(c_out, t, vv)


@njit(cache=True)
def temporal_conv_backward(f, w, dilation, gout):
    c_in, t, vv = f.shape
    c_out, _, k = w.shape
    half = (k - 1) // 2
    tw = t * vv
    ck = c_in * k
    f2 = f.reshape(c_in, tw)
    g2 = gout.reshape(c_out, tw)
    cols = np.empty((ck, tw), dtype=f.dtype)
    _gather(f2, cols, t, vv, k, dilation)
    gb = np.empty(c_out, dtype=f.dtype)
    for o in range(c_out):
        acc = 0.0
        row = g2[o]
        for idx in range(tw):
            acc += row[idx]
        gb[o] = acc
    g_t = np.ascontiguousarray(g2.T)
    gw = np.ascontiguousarray(np.dot(cols, g_t).T).reshape(c_out, c_in, k)
    w2t = np.ascontiguousarray(w.reshape(c_out, ck).T)
    gcols = np.dot(w2t, g2)
    gf = np.zeros(f.shape, dtype=f.dtype)
    gf2 = gf.reshape(c_in, tw)
    for ci in range(c_in):
        dst = gf2[ci]
        for j in range(k):
            row = gcols[ci * k + j]
            shift = (j - half) * dilation
            lo = (-shift if shift < 0 else 0) * vv
            hi = ((t - shift) if shift > 0 else t) * vv
            if hi < lo:
                hi = lo
            off = shift * vv
            for idx in range(lo, hi):
                dst[idx + off] += row[idx]
    return gf, gw, gb


@njit(cache=True)
def maxpool_forward(f, k):
    c, t, vv = f.shape
    half = (k - 1) // 2
    out = np.empty((c, t, vv), dtype=f.dtype)
    src = np.empty((c, t, vv), dtype=np.int64)
    for ci in range(c):
        for ti in range(t):
            jlo = ti - half if ti - half > 0 else 0
            jhi = ti + half + 1 if ti + half + 1 < t else t
            for vi in range(vv):
                best = f[ci, jlo, vi]
                bidx = jlo
                for s in range(jlo + 1, jhi):
                    val = f[ci, s, vi]
                    if val > best:  # strict: first max wins ties
                        best = val
                        bidx = s
                out[ci, ti, vi] = best
                src[ci, ti, vi] = bidx
    return out, src


@njit(cache=True)
def maxpool_backward(src, gout):
    c, t, vv = gout.shape
    gf = np.zeros(gout.shape, dtype=gout.dtype)
    for ci in range(c):
        for ti in range(t):
            for vi in range(vv):
                gf[ci, src[ci, ti, vi], vi] += gout[ci, ti, vi]
    return gf


@njit(cache=True)
def dtw_accumulate(cost):
    ta, tb = cost.shape
    d = np.empty((ta, tb), dtype=cost.dtype)
    d[0, 0] = cost[0, 0]
    for i in range(1, ta):
        d[i, 0] = d[i - 1, 0] + cost[i, 0]
    for j in range(1, tb):
        d[0, j] = d[0, j - 1] + cost[0, j]
    for i in range(1, ta):
        for j in range(1, tb):
            best = d[i - 1, j]
            if d[i, j - 1] < best:
                best = d[i, j - 1]
            if d[i - 1, j - 1] < best:
                best = d[i - 1, j - 1]
            d[i, j] = cost[i, j] + best
    return float(d[ta - 1, tb - 1])
