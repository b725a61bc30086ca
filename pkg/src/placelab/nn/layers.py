"""Layer forward/backward primitives.

Every op returns (output, cache); its *_backward mate consumes the upstream
gradient plus the cache and returns gradients in input-argument order. All
ops are dtype-preserving so the same code path runs float32 training and
float64 gradient checks.

Array layouts: images are NHWC, token batches are (N, T), frame stacks are
(N, 2, H, W, C).
"""

from __future__ import annotations

import numpy as np


# -- dense --------------------------------------------------------------

def dense_forward(x, w, b):
    """y = x @ w + b over the last axis; x may have any leading shape."""
    return x @ w + b, (x, w)


def dense_backward(dy, cache):
    x, w = cache
    batch_axes = tuple(range(x.ndim - 1))
    dw = np.tensordot(x, dy, axes=(batch_axes, batch_axes))
    db = dy.sum(axis=batch_axes)
    dx = dy @ w.T
    return dx, dw, db


# -- pointwise nonlinearity ----------------------------------------------

def relu_forward(x):
    y = np.maximum(x, 0)
    return y, (x > 0)


def relu_backward(dy, cache):
    return dy * cache


# -- 2-D convolution ------------------------------------------------------

def conv2d_forward(x, w, b, stride=1, pad=0):
    """x (N,H,W,Cin), w (kh,kw,Cin,Cout), b (Cout,). Zero padding."""
    n, h, wdt, _ = x.shape
    kh, kw, _, f = w.shape
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (wdt + 2 * pad - kw) // stride + 1
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0))) if pad else x
    out = np.zeros((n, ho, wo, f), dtype=x.dtype)
    out += b
    for a in range(kh):
        for c in range(kw):
            xs = xp[:, a:a + ho * stride:stride, c:c + wo * stride:stride, :]
            out += xs @ w[a, c]
    return out, (x.shape, xp, w, stride, pad)


def conv2d_backward(dy, cache):
    x_shape, xp, w, stride, pad = cache
    _, h, wdt, _ = x_shape
    kh, kw, _, _ = w.shape
    ho, wo = dy.shape[1], dy.shape[2]
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    db = dy.sum(axis=(0, 1, 2))
    for a in range(kh):
        for c in range(kw):
            xs = xp[:, a:a + ho * stride:stride, c:c + wo * stride:stride, :]
            dw[a, c] = np.tensordot(xs, dy, axes=([0, 1, 2], [0, 1, 2]))
            dxp[:, a:a + ho * stride:stride, c:c + wo * stride:stride, :] += dy @ w[a, c].T
    dx = dxp[:, pad:pad + h, pad:pad + wdt, :] if pad else dxp
    return dx, dw, db


# -- depth-wise temporal convolution over a 2-frame stack ------------------

def temporal_conv_forward(x, w, b):
    """Depth-wise kernel of length 2 over the frame axis, zero-padded in front.

    x (N, 2, ..., C), w (2, C), b (C,):
        y[:, 0] = w[1] * x[:, 0] + b
        y[:, 1] = w[0] * x[:, 0] + w[1] * x[:, 1] + b
    """
    if x.shape[1] != 2:
        raise ValueError("temporal stack must have length 2")
    y = np.empty_like(x)
    y[:, 0] = w[1] * x[:, 0] + b
    y[:, 1] = w[0] * x[:, 0] + w[1] * x[:, 1] + b
    return y, (x, w)


def temporal_conv_backward(dy, cache):
    x, w = cache
    frame_axes = tuple(a for a in range(dy.ndim - 1) if a != 1)
    dw = np.empty_like(w)
    dw[0] = (dy[:, 1] * x[:, 0]).sum(axis=tuple(range(dy[:, 1].ndim - 1)))
    dw[1] = (dy[:, 0] * x[:, 0] + dy[:, 1] * x[:, 1]).sum(axis=tuple(range(dy[:, 0].ndim - 1)))
    db = dy.sum(axis=frame_axes).sum(axis=0)
    dx = np.empty_like(x)
    dx[:, 0] = w[1] * dy[:, 0] + w[0] * dy[:, 1]
    dx[:, 1] = w[1] * dy[:, 1]
    return dx, dw, db


# -- embedding table -------------------------------------------------------

def embedding_forward(ids, table):
    """ids (N,T) int -> (N,T,D)."""
    return table[ids], (ids, table.shape)


def embedding_backward(dy, cache):
    ids, shape = cache
    dtable = np.zeros(shape, dtype=dy.dtype)
    np.add.at(dtable, ids.ravel(), dy.reshape(-1, shape[1]))
    return dtable


# -- position-gated masked mean pooling ------------------------------------

def gated_pool_forward(e, gates, mask):
    """Masked mean over t of e[:, t] * gates[t].

    e (N,T,D), gates (T,D), mask (N,T) in {0,1} with at least one valid
    position per row. The learned per-position gates bind words to their
    slots, which plain mean pooling cannot.
    """
    m = mask[:, :, None]
    cnt = mask.sum(axis=1)[:, None]
    y = (e * gates[None] * m).sum(axis=1) / cnt
    return y, (e, gates, m, cnt)


def gated_pool_backward(dy, cache):
    e, gates, m, cnt = cache
    dg_all = (dy / cnt)[:, None, :] * m  # gradient at e*gates, masked
    de = dg_all * gates[None]
    dgates = (dg_all * e).sum(axis=0)
    return de, dgates


# -- spatial mean pooling ---------------------------------------------------

def spatial_mean_forward(x):
    """x (..., H, W, C) -> (..., C)."""
    h, w = x.shape[-3], x.shape[-2]
    return x.mean(axis=(-3, -2)), (x.shape, h * w)


def spatial_mean_backward(dy, cache):
    x_shape, area = cache
    dx = np.broadcast_to(
        np.expand_dims(np.expand_dims(dy, -2), -2) / area, x_shape
    ).astype(dy.dtype)
    return np.ascontiguousarray(dx)


# -- row-wise L2 normalization ----------------------------------------------

def l2_normalize_forward(x):
    """Rows of x scaled to unit Euclidean norm."""
    n = np.sqrt((x * x).sum(axis=-1, keepdims=True))
    n = np.maximum(n, np.asarray(1e-12, dtype=x.dtype))
    y = x / n
    return y, (y, n)


def l2_normalize_backward(dy, cache):
    y, n = cache
    return (dy - y * (y * dy).sum(axis=-1, keepdims=True)) / n


# -- softmax cross-entropy ----------------------------------------------------

def log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_ce_forward(logits, targets):
    """Mean negative log-likelihood of integer targets. logits (N,K)."""
    logp = log_softmax(logits)
    n = logits.shape[0]
    loss = -logp[np.arange(n), targets].mean()
    return loss, (np.exp(logp), targets)


def softmax_ce_backward(cache, scale=1.0):
    probs, targets = cache
    n = probs.shape[0]
    d = probs.copy()
    d[np.arange(n), targets] -= 1.0
    return d * (scale / n)
