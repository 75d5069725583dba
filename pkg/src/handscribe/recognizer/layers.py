"""Batched forward/backward primitives for the recognizer: same-padding
convolution, ReLU, 2x2 max pooling, per-column dense layers and the
training-time Gaussian noise layer.

Array layout is (batch, x, y, channels) with x the eventual timestep
axis. Every forward returns (output, cache); every backward consumes the
cache and returns input/parameter gradients. Math inherits the dtype of
the parameters, so float64 parameters give float64 gradients (used by the
finite-difference checks).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Stride-1 same-padding convolution. x: (B, X, Y, Cin); w: (k, k,
    Cin, Cout); odd k. Caches the im2col patches for the backward pass."""
    k = w.shape[0]
    pad = k // 2
    batch, nx, ny, cin = x.shape
    cout = w.shape[3]
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    patches = sliding_window_view(xp, (k, k), axis=(1, 2))  # (B, X, Y, Cin, k, k)
    patches = np.moveaxis(patches, 3, 5)                    # (B, X, Y, k, k, Cin)
    flat = patches.reshape(batch, nx, ny, k * k * cin)
    out = flat @ w.reshape(k * k * cin, cout) + b
    return out, (x.shape, flat)


def conv2d_backward(dout: np.ndarray, w: np.ndarray, b: np.ndarray, cache):
    (batch, nx, ny, cin), flat = cache
    k = w.shape[0]
    pad = k // 2
    cout = w.shape[3]

    patches = flat.reshape(batch * nx * ny, k * k * cin)
    dout_flat = dout.reshape(batch * nx * ny, cout)
    dw = (patches.T @ dout_flat).reshape(w.shape)
    db = dout_flat.sum(axis=0)

    dpatches = (dout_flat @ w.reshape(k * k * cin, cout).T)
    dpatches = dpatches.reshape(batch, nx, ny, k, k, cin)
    dxp = np.zeros((batch, nx + 2 * pad, ny + 2 * pad, cin), dtype=dout.dtype)
    for ki in range(k):
        for kj in range(k):
            dxp[:, ki:ki + nx, kj:kj + ny, :] += dpatches[:, :, :, ki, kj, :]
    dx = dxp[:, pad:pad + nx, pad:pad + ny, :]
    return dx, dw, db


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout: np.ndarray, mask: np.ndarray):
    return dout * mask


def maxpool2_forward(x: np.ndarray):
    """2x2 stride-2 max pooling; X and Y must be even. Ties take the
    first candidate in (x, y) scan order."""
    batch, nx, ny, ch = x.shape
    view = x.reshape(batch, nx // 2, 2, ny // 2, 2, ch)
    quads = view.transpose(0, 1, 3, 5, 2, 4).reshape(batch, nx // 2, ny // 2, ch, 4)
    winners = quads.argmax(axis=-1)
    out = np.take_along_axis(quads, winners[..., None], axis=-1)[..., 0]
    return out, (x.shape, winners)


def maxpool2_backward(dout: np.ndarray, cache):
    (batch, nx, ny, ch), winners = cache
    dquads = np.zeros((batch, nx // 2, ny // 2, ch, 4), dtype=dout.dtype)
    np.put_along_axis(dquads, winners[..., None], dout[..., None], axis=-1)
    dview = dquads.reshape(batch, nx // 2, ny // 2, ch, 2, 2).transpose(0, 1, 4, 2, 5, 3)
    return dview.reshape(batch, nx, ny, ch)


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    """Per-timestep fully connected layer. x: (B, T, F); w: (F, G)."""
    return x @ w + b, x


def dense_backward(dout: np.ndarray, w: np.ndarray, cache):
    x = cache
    batch, nt, f = x.shape
    g = w.shape[1]
    dw = x.reshape(batch * nt, f).T @ dout.reshape(batch * nt, g)
    db = dout.reshape(batch * nt, g).sum(axis=0)
    dx = dout @ w.T
    return dx, dw, db


def gaussian_noise(x: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Additive noise used during training only; gradient is the identity."""
    if sigma <= 0:
        return x
    return x + rng.normal(0.0, sigma, x.shape).astype(x.dtype)
