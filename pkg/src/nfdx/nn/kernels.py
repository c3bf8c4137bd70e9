"""Hot loops of the CNN: im2col / col2im for same-padded convolution and 2x2 max pooling.

Each kernel exists as an ``@njit`` loop (``*_numba``) and a vectorised numpy
version (``*_numpy``). The unsuffixed names dispatch on
:data:`nfdx._accel.NUMBA_ENABLED`. Layout is always (batch, channels, rows, cols)
and float64. Column order of im2col is (channel, kernel row, kernel col), which
matches ``weights.reshape(out_channels, -1)``.
"""

import numpy as np

from .._accel import NUMBA_ENABLED, njit

__all__ = [
    "im2col",
    "col2im",
    "maxpool2x2",
    "maxpool2x2_backward",
    "im2col_numpy",
    "im2col_numba",
    "col2im_numpy",
    "col2im_numba",
    "maxpool2x2_numpy",
    "maxpool2x2_numba",
    "maxpool2x2_backward_numpy",
    "maxpool2x2_backward_numba",
]


# ---------------------------------------------------------------- numpy path


def im2col_numpy(x, k):
    b, c, h, w = x.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    # win: (b, c, h, w, k, k) -> rows (b, h, w), cols (c, ki, kj)
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(b * h * w, c * k * k)


def col2im_numpy(cols, shape, k):
    b, c, h, w = shape
    p = k // 2
    blocks = cols.reshape(b, h, w, c, k, k)
    out = np.zeros((b, c, h + 2 * p, w + 2 * p))
    for ki in range(k):
        for kj in range(k):
            out[:, :, ki : ki + h, kj : kj + w] += blocks[:, :, :, :, ki, kj].transpose(0, 3, 1, 2)
    return out[:, :, p : p + h, p : p + w].copy()


def maxpool2x2_numpy(x):
    b, c, h, w = x.shape
    ho, wo = h // 2, w // 2
    tiles = x[:, :, : 2 * ho, : 2 * wo].reshape(b, c, ho, 2, wo, 2).transpose(0, 1, 2, 4, 3, 5)
    tiles = tiles.reshape(b, c, ho, wo, 4)
    arg = tiles.argmax(axis=-1).astype(np.int8)
    out = np.take_along_axis(tiles, arg[..., None].astype(np.intp), axis=-1)[..., 0]
    return np.ascontiguousarray(out), arg


def maxpool2x2_backward_numpy(dout, arg, in_shape):
    b, c, h, w = in_shape
    ho, wo = dout.shape[2], dout.shape[3]
    tiles = np.zeros((b, c, ho, wo, 4))
    np.put_along_axis(tiles, arg[..., None].astype(np.intp), dout[..., None], axis=-1)
    dx = np.zeros(in_shape)
    dx[:, :, : 2 * ho, : 2 * wo] = (
        tiles.reshape(b, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, 2 * ho, 2 * wo)
    )
    return dx


# ---------------------------------------------------------------- numba path


@njit
def _im2col_loop(x, k, cols):
    b, c, h, w = x.shape
    p = k // 2
    for n in range(b):
        for i in range(h):
            for j in range(w):
                row = (n * h + i) * w + j
                col = 0
                for ch in range(c):
                    for ki in range(k):
                        ii = i + ki - p
                        for kj in range(k):
                            jj = j + kj - p
                            if 0 <= ii < h and 0 <= jj < w:
                                cols[row, col] = x[n, ch, ii, jj]
                            else:
                                cols[row, col] = 0.0
                            col += 1


@njit
def _col2im_loop(cols, k, out):
    b, c, h, w = out.shape
    p = k // 2
    for n in range(b):
        for i in range(h):
            for j in range(w):
                row = (n * h + i) * w + j
                col = 0
                for ch in range(c):
                    for ki in range(k):
                        ii = i + ki - p
                        for kj in range(k):
                            jj = j + kj - p
                            if 0 <= ii < h and 0 <= jj < w:
                                out[n, ch, ii, jj] += cols[row, col]
                            col += 1


@njit
def _maxpool_loop(x, out, arg):
    b, c, ho, wo = out.shape
    for n in range(b):
        for ch in range(c):
            for i in range(ho):
                for j in range(wo):
                    best = x[n, ch, 2 * i, 2 * j]
                    which = 0
                    for t in range(1, 4):
                        v = x[n, ch, 2 * i + t // 2, 2 * j + t % 2]
                        if v > best:
                            best = v
                            which = t
                    out[n, ch, i, j] = best
                    arg[n, ch, i, j] = which


@njit
def _maxpool_backward_loop(dout, arg, dx):
    b, c, ho, wo = dout.shape
    for n in range(b):
        for ch in range(c):
            for i in range(ho):
                for j in range(wo):
                    t = arg[n, ch, i, j]
                    dx[n, ch, 2 * i + t // 2, 2 * j + t % 2] = dout[n, ch, i, j]


def im2col_numba(x, k):
    b, c, h, w = x.shape
    cols = np.empty((b * h * w, c * k * k))
    _im2col_loop(np.ascontiguousarray(x), k, cols)
    return cols


def col2im_numba(cols, shape, k):
    out = np.zeros(shape)
    _col2im_loop(np.ascontiguousarray(cols), k, out)
    return out


def maxpool2x2_numba(x):
    b, c, h, w = x.shape
    out = np.empty((b, c, h // 2, w // 2))
    arg = np.empty((b, c, h // 2, w // 2), dtype=np.int8)
    _maxpool_loop(np.ascontiguousarray(x), out, arg)
    return out, arg


def maxpool2x2_backward_numba(dout, arg, in_shape):
    dx = np.zeros(in_shape)
    _maxpool_backward_loop(np.ascontiguousarray(dout), np.ascontiguousarray(arg), dx)
    return dx


if NUMBA_ENABLED:
    im2col, col2im = im2col_numba, col2im_numba
    maxpool2x2, maxpool2x2_backward = maxpool2x2_numba, maxpool2x2_backward_numba
else:
    im2col, col2im = im2col_numpy, col2im_numpy
    maxpool2x2, maxpool2x2_backward = maxpool2x2_numpy, maxpool2x2_backward_numpy
