"""JIT-compiled kernels for the 2-hidden-layer rectifier network.

Same contract as ``kernels_numpy``; hand-rolled loops keep every dot
product a fixed-order summation (no BLAS call overhead on these tiny
matrices, and bit-reproducible results run to run).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _affine_relu(x, w, b, out):
    for j in range(w.shape[1]):
        acc = b[j]
        for i in range(w.shape[0]):
            acc += x[i] * w[i, j]
        out[j] = acc if acc > 0.0 else 0.0


@njit(cache=True)
def forward_single(w1, b1, w2, b2, w3, b3, x):
    h1 = np.empty(w1.shape[1])
    h2 = np.empty(w2.shape[1])
    _affine_relu(x, w1, b1, h1)
    _affine_relu(h1, w2, b2, h2)
    out = np.empty(w3.shape[1])
    for j in range(w3.shape[1]):
        acc = b3[j]
        for i in range(w3.shape[0]):
            acc += h2[i] * w3[i, j]
        out[j] = acc
    return out


@njit(cache=True)
def forward_cache(w1, b1, w2, b2, w3, b3, xs):
    n = xs.shape[0]
    h1 = np.empty((n, w1.shape[1]))
    h2 = np.empty((n, w2.shape[1]))
    q = np.empty((n, w3.shape[1]))
    for r in range(n):
        _affine_relu(xs[r], w1, b1, h1[r])
        _affine_relu(h1[r], w2, b2, h2[r])
        for j in range(w3.shape[1]):
            acc = b3[j]
            for i in range(w3.shape[0]):
                acc += h2[r, i] * w3[i, j]
            q[r, j] = acc
    return q, h1, h2


@njit(cache=True)
def forward_batch(w1, b1, w2, b2, w3, b3, xs):
    q, _, _ = forward_cache(w1, b1, w2, b2, w3, b3, xs)
    return q


@njit(cache=True)
def backward(w1, w2, w3, xs, h1, h2, dq):
    n = xs.shape[0]
    gw1 = np.zeros_like(w1)
    gb1 = np.zeros(w1.shape[1])
    gw2 = np.zeros_like(w2)
    gb2 = np.zeros(w2.shape[1])
    gw3 = np.zeros_like(w3)
    gb3 = np.zeros(w3.shape[1])
    dh1 = np.empty(w2.shape[0])
    dh2 = np.empty(w3.shape[0])
    for r in range(n):
        for k in range(w3.shape[0]):
            acc = 0.0
            for j in range(w3.shape[1]):
                d = dq[r, j]
                gw3[k, j] += h2[r, k] * d
                acc += d * w3[k, j]
            dh2[k] = acc if h2[r, k] > 0.0 else 0.0
        for j in range(w3.shape[1]):
            gb3[j] += dq[r, j]
        for k in range(w2.shape[0]):
            acc = 0.0
            for j in range(w2.shape[1]):
                d = dh2[j]
                gw2[k, j] += h1[r, k] * d
                acc += d * w2[k, j]
            dh1[k] = acc if h1[r, k] > 0.0 else 0.0
        for j in range(w2.shape[1]):
            gb2[j] += dh2[j]
        for k in range(w1.shape[0]):
            for j in range(w1.shape[1]):
                gw1[k, j] += xs[r, k] * dh1[j]
        for j in range(w1.shape[1]):
            gb1[j] += dh1[j]
    return gw1, gb1, gw2, gb2, gw3, gb3


@njit(cache=True)
def train_step(w1, b1, w2, b2, w3, b3, xs, targets, taken, lr):
    n = xs.shape[0]
    q, h1, h2 = forward_cache(w1, b1, w2, b2, w3, b3, xs)
    dq = np.zeros_like(q)
    loss = 0.0
    for r in range(n):
        a = taken[r]
        diff = q[r, a] - targets[r, a]
        loss += diff * diff
        dq[r, a] = 2.0 * diff / n
    loss /= n
    gw1, gb1, gw2, gb2, gw3, gb3 = backward(w1, w2, w3, xs, h1, h2, dq)
    w1 -= lr * gw1
    b1 -= lr * gb1
    w2 -= lr * gw2
    b2 -= lr * gb2
    w3 -= lr * gw3
    b3 -= lr * gb3
    return loss
