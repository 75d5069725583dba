"""Multidimensional LSTM over a 2-D feature grid.

Four scans, one per diagonal direction, each receiving the hidden state
and cell of the left and above neighbors in its own scan order (realized
by flipping the grid, running one canonical top-left scan, and flipping
back). Cells on the same anti-diagonal are independent, so the scan
advances wavefront by wavefront with batched matrix products.

Per cell, with five gate blocks [input, forget-left, forget-up, output,
candidate] stacked along the last weight axis:

    pre = x W_x + h_left W_h + h_up W_v + b
    c   = sig(i) tanh(g) + sig(f_l) c_left + sig(f_u) c_up
    h   = sig(o) tanh(c)
"""

from __future__ import annotations

import numpy as np

# (flip time axis, flip height axis) per scan direction
DIRECTIONS = ((False, False), (True, False), (False, True), (True, True))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp may overflow for very negative inputs; the 1/(1+inf) -> 0 limit
    # is exactly right, so just silence the warning
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def _diagonals(nt: int, ny: int):
    for d in range(nt + ny - 1):
        ts = np.arange(max(0, d - ny + 1), min(nt, d + 1))
        yield ts, d - ts


def _flip(arr: np.ndarray, flips: tuple[bool, bool]) -> np.ndarray:
    if flips[0]:
        arr = arr[:, ::-1]
    if flips[1]:
        arr = arr[:, :, ::-1]
    return arr


def scan_forward(x: np.ndarray, wx: np.ndarray, wh: np.ndarray, wv: np.ndarray, b: np.ndarray):
    """One canonical top-left scan. x: (B, T, Y, Cin); returns h of shape
    (B, T, Y, H) plus the cache for scan_backward."""
    batch, nt, ny, _ = x.shape
    hidden = wh.shape[0]

    pre_x = x @ wx + b
    h_pad = np.zeros((batch, nt + 1, ny + 1, hidden), dtype=x.dtype)
    c_pad = np.zeros_like(h_pad)
    gates_i = np.empty((batch, nt, ny, hidden), dtype=x.dtype)
    gates_fl = np.empty_like(gates_i)
    gates_fu = np.empty_like(gates_i)
    gates_o = np.empty_like(gates_i)
    gates_g = np.empty_like(gates_i)
    tanh_c = np.empty_like(gates_i)

    for ts, ys in _diagonals(nt, ny):
        h_left = h_pad[:, ts, ys + 1]
        h_up = h_pad[:, ts + 1, ys]
        pre = pre_x[:, ts, ys] + h_left @ wh + h_up @ wv
        i = _sigmoid(pre[..., 0:hidden])
        fl = _sigmoid(pre[..., hidden:2 * hidden])
        fu = _sigmoid(pre[..., 2 * hidden:3 * hidden])
        o = _sigmoid(pre[..., 3 * hidden:4 * hidden])
        g = np.tanh(pre[..., 4 * hidden:])

        c = i * g + fl * c_pad[:, ts, ys + 1] + fu * c_pad[:, ts + 1, ys]
        tc = np.tanh(c)
        h = o * tc

        c_pad[:, ts + 1, ys + 1] = c
        h_pad[:, ts + 1, ys + 1] = h
        gates_i[:, ts, ys] = i
        gates_fl[:, ts, ys] = fl
        gates_fu[:, ts, ys] = fu
        gates_o[:, ts, ys] = o
        gates_g[:, ts, ys] = g
        tanh_c[:, ts, ys] = tc

    cache = (x, h_pad, c_pad, gates_i, gates_fl, gates_fu, gates_o, gates_g, tanh_c)
    return h_pad[:, 1:, 1:], cache


def scan_backward(dh_out: np.ndarray, wx, wh, wv, cache):
    """Backward pass of one canonical scan. dh_out: gradient on every
    cell's hidden output."""
    x, h_pad, c_pad, g_i, g_fl, g_fu, g_o, g_g, tanh_c = cache
    batch, nt, ny, cin = x.shape
    hidden = wh.shape[0]

    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    dwv = np.zeros_like(wv)
    db = np.zeros(wx.shape[1], dtype=x.dtype)
    # recurrent gradient carriers, indexed like h_pad/c_pad
    dh_pad = np.zeros_like(h_pad)
    dc_pad = np.zeros_like(c_pad)

    for ts, ys in reversed(list(_diagonals(nt, ny))):
        i = g_i[:, ts, ys]
        fl = g_fl[:, ts, ys]
        fu = g_fu[:, ts, ys]
        o = g_o[:, ts, ys]
        g = g_g[:, ts, ys]
        tc = tanh_c[:, ts, ys]
        c_left = c_pad[:, ts, ys + 1]
        c_up = c_pad[:, ts + 1, ys]

        dh = dh_out[:, ts, ys] + dh_pad[:, ts + 1, ys + 1]
        dc = dc_pad[:, ts + 1, ys + 1] + dh * o * (1.0 - tc * tc)

        dpre = np.concatenate([
            dc * g * i * (1.0 - i),
            dc * c_left * fl * (1.0 - fl),
            dc * c_up * fu * (1.0 - fu),
            dh * tc * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ], axis=-1)

        h_left = h_pad[:, ts, ys + 1]
        h_up = h_pad[:, ts + 1, ys]
        x_cells = x[:, ts, ys]

        flat = dpre.reshape(-1, dpre.shape[-1])
        dwx += x_cells.reshape(-1, cin).T @ flat
        dwh += h_left.reshape(-1, hidden).T @ flat
        dwv += h_up.reshape(-1, hidden).T @ flat
        db += flat.sum(axis=0)
        dx[:, ts, ys] = dpre @ wx.T

        # cells on one diagonal target distinct rows/columns, so plain
        # fancy-index accumulation is safe
        dh_pad[:, ts, ys + 1] += dpre @ wh.T
        dh_pad[:, ts + 1, ys] += dpre @ wv.T
        dc_pad[:, ts, ys + 1] += dc * fl
        dc_pad[:, ts + 1, ys] += dc * fu

    return dx, dwx, dwh, dwv, db


def forward(x: np.ndarray, params: dict, prefix: str = "lstm"):
    """All four directional scans, summed. Returns (B, T, Y, H) and the
    per-direction caches."""
    total = None
    caches = []
    for d, flips in enumerate(DIRECTIONS):
        xd = _flip(x, flips)
        h, cache = scan_forward(
            np.ascontiguousarray(xd),
            params[f"{prefix}{d}/wx"], params[f"{prefix}{d}/wh"],
            params[f"{prefix}{d}/wv"], params[f"{prefix}{d}/b"],
        )
        h = _flip(h, flips)
        total = h if total is None else total + h
        caches.append(cache)
    return total, caches


def backward(dh: np.ndarray, params: dict, caches, prefix: str = "lstm"):
    """Backward through the four-direction sum; returns dx and gradients
    keyed like the parameters."""
    dx_total = None
    grads = {}
    for d, flips in enumerate(DIRECTIONS):
        dhd = np.ascontiguousarray(_flip(dh, flips))
        dx, dwx, dwh, dwv, db = scan_backward(
            dhd,
            params[f"{prefix}{d}/wx"], params[f"{prefix}{d}/wh"],
            params[f"{prefix}{d}/wv"], caches[d],
        )
        dx = _flip(dx, flips)
        dx_total = dx.copy() if dx_total is None else dx_total + dx
        grads[f"{prefix}{d}/wx"] = dwx
        grads[f"{prefix}{d}/wh"] = dwh
        grads[f"{prefix}{d}/wv"] = dwv
        grads[f"{prefix}{d}/b"] = db
    return dx_total, grads
