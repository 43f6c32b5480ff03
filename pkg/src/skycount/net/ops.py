"""Dense 2-D convolution and pooling primitives, stride 1 only.

All activations flow channels-last (B, H, W, C) so the im2col buffers feed
BLAS sgemm directly; the public model API converts from/to the channels-
first convention at the boundary. Convolutions are cross-correlations (no
kernel flip), matching the usual CNN convention.

im2col columns are ordered (ky, kx, channel); weight matrices are
reordered to match before the GEMM.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import maximum_filter

from .kernels import im2col_gather, maxpool_scatter, maxpool_valid_argmax

# im2col scratch cap per GEMM call; keeps peak memory flat for any input
_COL_BUDGET_BYTES = 320 * 1024 * 1024
# above this, a layer's forward im2col is rebuilt in backward instead of kept
_COL_CACHE_LIMIT_BYTES = 1536 * 1024 * 1024


def _pad_hw(x: np.ndarray, pad: int, value: float = 0.0) -> np.ndarray:
    if pad == 0:
        return x
    b, h, w, c = x.shape
    if value == 0.0:
        out = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=x.dtype)
    else:
        out = np.full((b, h + 2 * pad, w + 2 * pad, c), value, dtype=x.dtype)
    out[:, pad : pad + h, pad : pad + w, :] = x
    return out


def _padded_input(x: np.ndarray, k: int, padding: str) -> np.ndarray:
    if padding == "same":
        return _pad_hw(x, k // 2)
    if padding == "valid":
        return x
    raise ValueError(f"unknown padding mode {padding!r}")


def _weights_matrix(weights: np.ndarray, dtype) -> np.ndarray:
    """(O, C, k, k) kernels as a (k*k*C, O) GEMM operand in column order."""
    o = weights.shape[0]
    return np.ascontiguousarray(weights.transpose(0, 2, 3, 1).reshape(o, -1).T, dtype=dtype)


def _iter_col_chunks(xp: np.ndarray, k: int):
    """Yield (b0, b1, r0, r1, cols) im2col pieces within the scratch budget.

    cols is ((b1-b0) * (r1-r0) * w_out, k*k*c), C-contiguous, (ky, kx, c)
    column order.
    """
    b, hp, wp, c = xp.shape
    h_out, w_out = hp - k + 1, wp - k + 1
    ck2 = c * k * k
    item_bytes = h_out * w_out * ck2 * xp.dtype.itemsize
    if item_bytes <= _COL_BUDGET_BYTES:
        per = max(1, _COL_BUDGET_BYTES // max(1, item_bytes))
        for b0 in range(0, b, per):
            b1 = min(b, b0 + per)
            cols4 = np.empty(((b1 - b0), h_out, w_out, ck2), dtype=xp.dtype)
            im2col_gather(xp[b0:b1], cols4, k)
            yield b0, b1, 0, h_out, cols4.reshape(-1, ck2)
    else:
        slab = max(1, _COL_BUDGET_BYTES // max(1, w_out * ck2 * xp.dtype.itemsize))
        for b0 in range(b):
            for r0 in range(0, h_out, slab):
                r1 = min(h_out, r0 + slab)
                cols4 = np.empty((1, r1 - r0, w_out, ck2), dtype=xp.dtype)
                im2col_gather(xp[b0 : b0 + 1, r0 : r1 + k - 1], cols4, k)
                yield b0, b0 + 1, r0, r1, cols4.reshape(-1, ck2)


def conv2d_nhwc(
    x: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray | None,
    padding: str,
    keep_cols: bool = False,
) -> tuple[np.ndarray, list | None]:
    """Correlate x (B,H,W,C) with weights (O,C,k,k); returns (B,H',W',O).

    With keep_cols the im2col chunks are returned for reuse by the weight-
    gradient pass (skipped for very large inputs).
    """
    if x.shape[3] != weights.shape[1]:
        raise ValueError(f"channel mismatch: input has {x.shape[3]}, weights expect {weights.shape[1]}")
    k = weights.shape[2]
    xp = _padded_input(x, k, padding)
    b, hp, wp, c = xp.shape
    h_out, w_out = hp - k + 1, wp - k + 1
    if h_out <= 0 or w_out <= 0:
        raise ValueError(f"input {x.shape[1]}x{x.shape[2]} too small for a {k}x{k} valid window")
    o = weights.shape[0]
    w2 = _weights_matrix(weights, x.dtype)

    total_bytes = b * h_out * w_out * c * k * k * x.dtype.itemsize
    cache = [] if keep_cols and total_bytes <= _COL_CACHE_LIMIT_BYTES else None

    out = np.empty((b, h_out, w_out, o), dtype=x.dtype)
    for b0, b1, r0, r1, cols in _iter_col_chunks(xp, k):
        out[b0:b1, r0:r1] = (cols @ w2).reshape(b1 - b0, r1 - r0, w_out, o)
        if cache is not None:
            cache.append((b0, b1, r0, r1, cols))
    if bias is not None:
        out += bias.astype(x.dtype)
    return out, cache


def conv2d_backward_weights(
    x: np.ndarray,
    grad_out: np.ndarray,
    k: int,
    padding: str,
    has_bias: bool,
    cols_cache: list | None = None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Gradient of a conv w.r.t. weights/bias given the cached input."""
    c = x.shape[3]
    o = grad_out.shape[3]
    w_out = grad_out.shape[2]
    gw2 = np.zeros((c * k * k, o), dtype=np.float64 if x.dtype == np.float64 else np.float32)
    chunks = cols_cache if cols_cache is not None else _iter_col_chunks(_padded_input(x, k, padding), k)
    for b0, b1, r0, r1, cols in chunks:
        g2 = grad_out[b0:b1, r0:r1].reshape((b1 - b0) * (r1 - r0) * w_out, o)
        gw2 += cols.T @ g2
    # undo the (ky, kx, c) column order
    gw = np.ascontiguousarray(gw2.T.reshape(o, k, k, c).transpose(0, 3, 1, 2)).astype(grad_out.dtype)
    gb = grad_out.sum(axis=(0, 1, 2), dtype=np.float64).astype(grad_out.dtype) if has_bias else None
    return gw, gb


def conv2d_backward_input(
    grad_out: np.ndarray, weights: np.ndarray, padding: str, in_shape: tuple[int, ...]
) -> np.ndarray:
    """Gradient w.r.t. the conv input: full correlation with flipped kernels."""
    o, c, k, _ = weights.shape
    # swap in/out channels and flip spatially; backward of a stride-1
    # correlation is again a stride-1 correlation
    w_t = np.ascontiguousarray(weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    if padding == "same":
        gx, _ = conv2d_nhwc(grad_out, w_t, None, "same")
    else:
        gp = _pad_hw(grad_out, k - 1)
        gx, _ = conv2d_nhwc(gp, w_t, None, "valid")
    if gx.shape[1] != in_shape[1] or gx.shape[2] != in_shape[2]:
        raise AssertionError("conv backward produced a mismatched input gradient shape")
    return gx


def maxpool_nhwc(
    x: np.ndarray, k: int, padding: str, want_argmax: bool = False
) -> tuple[np.ndarray, np.ndarray | None]:
    """Stride-1 max pool; same mode pads -inf so padding never wins.

    With want_argmax, also returns the flat (i*k + j) offset of the first
    maximum per window (raster order), for routing gradients.
    """
    if padding == "same":
        xp = _pad_hw(x, k // 2, value=-np.inf)
    elif padding == "valid":
        xp = x
    else:
        raise ValueError(f"unknown padding mode {padding!r}")
    b, hp, wp, c = xp.shape
    h_out, w_out = hp - k + 1, wp - k + 1
    if h_out <= 0 or w_out <= 0:
        raise ValueError(f"input {x.shape[1]}x{x.shape[2]} too small for a {k}x{k} pool window")

    if not want_argmax:
        # separable running max in C; far less traffic than offset scans
        filt = maximum_filter(xp, size=(1, k, k, 1), mode="constant", cval=-np.inf)
        off = k // 2
        return np.ascontiguousarray(filt[:, off : off + h_out, off : off + w_out, :]), None

    out = np.empty((b, h_out, w_out, c), dtype=xp.dtype)
    argmax = np.empty((b, h_out, w_out, c), dtype=np.int8)
    maxpool_valid_argmax(xp, out, argmax, k)
    return out, argmax


def maxpool_backward(
    grad_out: np.ndarray, argmax: np.ndarray, k: int, padding: str, in_shape: tuple[int, ...]
) -> np.ndarray:
    """Scatter each window's gradient to its recorded maximum position."""
    b, h, w, c = in_shape
    pad = k // 2 if padding == "same" else 0
    gxp = np.zeros((b, h + 2 * pad, w + 2 * pad, c), dtype=grad_out.dtype)
    maxpool_scatter(grad_out, argmax, gxp, k)
    if pad:
        return gxp[:, pad : pad + h, pad : pad + w, :]
    return gxp
