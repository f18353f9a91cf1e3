"""Vectorized forward/backward primitives for each layer kind.

All functions are pure: they take arrays plus a cache and return new arrays.
Batch extent is always present (callers add it for single samples). Compute
dtype follows the input arrays, so the same code serves float32 training and
float64 gradient checking.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _im2col(xp: np.ndarray, kernel: int, stride: int) -> np.ndarray:
    # (N, C, Hp, Wp) -> (N, C*k*k, out_h*out_w)
    n, c = xp.shape[:2]
    win = sliding_window_view(xp, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = win.shape[2], win.shape[3]
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * kernel * kernel, out_h * out_w)
    return np.ascontiguousarray(cols)


def conv_forward(x, w, b, stride: int, pad: int):
    n, c, h, wid = x.shape
    f, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    cols = _im2col(xp, k, stride)
    out_h = (h + 2 * pad - k) // stride + 1
    out_w = (wid + 2 * pad - k) // stride + 1
    out = w.reshape(f, -1) @ cols + b.reshape(1, f, 1)
    out = out.reshape(n, f, out_h, out_w)
    cache = (x.shape, xp.shape, cols, w, stride, pad)
    return out, cache


def conv_backward(dout, cache):
    x_shape, xp_shape, cols, w, stride, pad = cache
    n, c, h, wid = x_shape
    f, _, k, _ = w.shape
    out_h, out_w = dout.shape[2], dout.shape[3]

    dmat = dout.reshape(n, f, -1)
    db = dout.sum(axis=(0, 2, 3))
    dw = np.einsum("nfq,npq->fp", dmat, cols, optimize=True).reshape(w.shape)

    # Scatter column gradients back; per kernel offset the strided slices are
    # disjoint, so k*k vectorized adds cover all overlaps.
    dcols = (w.reshape(f, -1).T @ dmat).reshape(n, c, k, k, out_h, out_w)
    dxp = np.zeros(xp_shape, dtype=dout.dtype)
    for ki in range(k):
        for kj in range(k):
            dxp[:, :, ki:ki + (out_h - 1) * stride + 1:stride,
                kj:kj + (out_w - 1) * stride + 1:stride] += dcols[:, :, ki, kj]
    dx = dxp[:, :, pad:pad + h, pad:pad + wid] if pad else dxp
    return dx, dw, db


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def maxpool_forward(x, window: int, stride: int):
    n, c, h, w = x.shape
    win = sliding_window_view(x, (window, window), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = win.shape[2], win.shape[3]
    flat = win.reshape(n, c, out_h, out_w, window * window)
    # argmax picks the first maximal element in scan order; backward routes there
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    cache = (x.shape, window, stride, arg)
    return np.ascontiguousarray(out), cache


def maxpool_backward(dout, cache):
    x_shape, window, stride, arg = cache
    n, c, h, w = x_shape
    out_h, out_w = arg.shape[2], arg.shape[3]
    dx = np.zeros(x_shape, dtype=dout.dtype)
    if stride >= window:
        # Non-overlapping windows: scatter via put_along_axis, then place blocks.
        grid = np.zeros((n, c, out_h, out_w, window * window), dtype=dout.dtype)
        np.put_along_axis(grid, arg[..., None], dout[..., None], axis=-1)
        grid = grid.reshape(n, c, out_h, out_w, window, window)
        for ki in range(window):
            for kj in range(window):
                dx[:, :, ki:ki + (out_h - 1) * stride + 1:stride,
                   kj:kj + (out_w - 1) * stride + 1:stride] += grid[..., ki, kj]
    else:
        # Overlapping windows can route several gradients to one input cell.
        rows = (arg // window) + stride * np.arange(out_h)[None, None, :, None]
        cols = (arg % window) + stride * np.arange(out_w)[None, None, None, :]
        bi = np.arange(n)[:, None, None, None]
        ci = np.arange(c)[None, :, None, None]
        np.add.at(dx, (bi, ci, rows, cols), dout)
    return dx


def dropout_forward(x, rate: float, train: bool, rng: np.random.Generator | None):
    if not train or rate == 0.0:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype)
    mask = keep / x.dtype.type(1.0 - rate)  # inverted dropout: inference is identity
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def fc_forward(x, w, b):
    n = x.shape[0]
    flat = x.reshape(n, -1)
    out = flat @ w.T + b
    cache = (x.shape, flat, w)
    return out, cache


def fc_backward(dout, cache):
    x_shape, flat, w = cache
    dw = dout.T @ flat
    db = dout.sum(axis=0)
    dx = (dout @ w).reshape(x_shape)
    return dx, dw, db


def softmax_probabilities(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction, computed at 64-bit."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy of softmax(logits) at labels, with its logit gradient.

    Accumulation happens at 64-bit regardless of the storage dtype; the
    returned gradient is cast back to the logits dtype.
    """
    n = logits.shape[0]
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(n), labels]))
    probs = np.exp(z - log_norm[:, None])
    probs[np.arange(n), labels] -= 1.0
    dlogits = (probs / n).astype(logits.dtype)
    return loss, dlogits
