"""Numba-compiled gather/scatter kernels for the hot memory-bound paths.

The GEMMs stay in BLAS; these kernels only build im2col buffers and run
stride-1 max pooling, where plain numpy strided copies are the bottleneck.
All kernels are layout-exact replacements for the numpy fallbacks and are
specialized per dtype on first use (disk-cached).
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(parallel=True, fastmath=True, cache=True)
def im2col_gather(xp, cols4, k):
    """cols4[b, y, x, :] = xp[b, y:y+k, x:x+k, :] flattened in (i, j, c) order.

    For each (b, y, x, i) the source run over (j, c) is contiguous, so the
    innermost copy is a straight k*c-element memcpy.
    """
    b_n, hp, wp, c = xp.shape
    h_out = cols4.shape[1]
    w_out = cols4.shape[2]
    run = k * c
    for br in prange(b_n * h_out):
        b = br // h_out
        y = br % h_out
        dst_row = cols4[b, y].reshape(w_out * k * run)
        src = xp[b]
        for x in range(w_out):
            base = x * k * run
            for i in range(k):
                s = src[y + i].reshape(wp * c)
                s0 = x * c
                d0 = base + i * run
                for t in range(run):
                    dst_row[d0 + t] = s[s0 + t]


@njit(parallel=True, fastmath=True, cache=True)
def maxpool_valid_argmax(x, out, argmax, k):
    """Valid stride-1 max pool with first-wins flat argmax (raster order)."""
    b_n, h, w, c = x.shape
    h_out = out.shape[1]
    w_out = out.shape[2]
    for br in prange(b_n * h_out):
        b = br // h_out
        y = br % h_out
        for xo in range(w_out):
            for ch in range(c):
                out[b, y, xo, ch] = x[b, y, xo, ch]
                argmax[b, y, xo, ch] = 0
            for i in range(k):
                for j in range(k):
                    if i == 0 and j == 0:
                        continue
                    code = np.int8(i * k + j)
                    for ch in range(c):
                        v = x[b, y + i, xo + j, ch]
                        if v > out[b, y, xo, ch]:
                            out[b, y, xo, ch] = v
                            argmax[b, y, xo, ch] = code
    return out


@njit(parallel=True, fastmath=True, cache=True)
def maxpool_scatter(grad, argmax, gx, k):
    """Route each window's gradient to its recorded maximum position."""
    b_n, h_out, w_out, c = grad.shape
    for b in prange(b_n):
        for y in range(h_out):
            for x in range(w_out):
                for ch in range(c):
                    code = argmax[b, y, x, ch]
                    i = code // k
                    j = code % k
                    gx[b, y + i, x + j, ch] += grad[b, y, x, ch]
