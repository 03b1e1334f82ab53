"""Pure-numpy convolution and pooling kernels.

Fallback used when the compiled extension is unavailable. Both backends
agree to numerical round-off (summation order differs) and use identical
max-pool tie handling: first maximum in row-major window order wins.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND_NAME = "numpy"


def conv2d_forward(x, w, b, stride, padding):
    """x: (n, c_in, h, w) f64, w: (c_out, c_in, kh, kw), b: (c_out,)."""
    n, c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    h_out = (h + 2 * padding - kh) // stride + 1
    w_out = (wd + 2 * padding - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    out = np.zeros((n, c_out, h_out, w_out))
    for i in range(kh):
        for j in range(kw):
            xs = xp[:, :, i : i + stride * h_out : stride, j : j + stride * w_out : stride]
            out += np.einsum("nchw,oc->nohw", xs, w[:, :, i, j])
    out += b[None, :, None, None]
    return out


def conv2d_backward(x, w, dout, stride, padding):
    """Returns (dx, dw, db) for the forward pass above."""
    n, c_in, h, wd = x.shape
    c_out, _, kh, kw = w.shape
    _, _, h_out, w_out = dout.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for i in range(kh):
        for j in range(kw):
            xs = xp[:, :, i : i + stride * h_out : stride, j : j + stride * w_out : stride]
            dw[:, :, i, j] = np.einsum("nohw,nchw->oc", dout, xs)
            dxp[:, :, i : i + stride * h_out : stride, j : j + stride * w_out : stride] += np.einsum(
                "nohw,oc->nchw", dout, w[:, :, i, j]
            )
    db = dout.sum(axis=(0, 2, 3))
    dx = dxp[:, :, padding : padding + h, padding : padding + wd]
    return np.ascontiguousarray(dx), dw, db


def maxpool2d_forward(x, kernel, stride):
    """Returns (out, idx) where idx holds the flat h*w source index per cell."""
    n, c, h, wd = x.shape
    h_out = (h - kernel) // stride + 1
    w_out = (wd - kernel) // stride + 1
    win = sliding_window_view(x, (kernel, kernel), axis=(2, 3))[:, :, ::stride, ::stride]
    flat = win.reshape(n, c, h_out, w_out, kernel * kernel)
    arg = flat.argmax(axis=-1)
    out = np.take_along_axis(flat, arg[..., None], axis=-1)[..., 0]
    oi, oj = np.divmod(arg, kernel)
    rows = oi + (np.arange(h_out) * stride)[None, None, :, None]
    cols = oj + (np.arange(w_out) * stride)[None, None, None, :]
    idx = rows * wd + cols
    return np.ascontiguousarray(out), idx.astype(np.int64)


def maxpool2d_backward(idx, dout, h, w):
    """Scatter dout back through the argmax indices; returns dx (n, c, h, w)."""
    n, c, h_out, w_out = dout.shape
    dx = np.zeros((n, c, h * w))
    ni = np.arange(n)[:, None, None, None]
    ci = np.arange(c)[None, :, None, None]
    np.add.at(dx, (ni, ci, idx), dout)
    return dx.reshape(n, c, h, w)
