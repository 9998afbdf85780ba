"""Pure-numpy kernels for the 2-hidden-layer rectifier network.

Reference implementation of the hot path; the numba module mirrors these
signatures exactly. Row convention: inputs are (batch, in), weights are
(in, out), biases (out,).
"""

from __future__ import annotations

import numpy as np


def forward_single(w1, b1, w2, b2, w3, b3, x):
    h1 = np.maximum(x @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    return h2 @ w3 + b3


def forward_batch(w1, b1, w2, b2, w3, b3, xs):
    h1 = np.maximum(xs @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    return h2 @ w3 + b3


def forward_cache(w1, b1, w2, b2, w3, b3, xs):
    """Forward pass keeping the post-rectifier activations for backprop."""
    h1 = np.maximum(xs @ w1 + b1, 0.0)
    h2 = np.maximum(h1 @ w2 + b2, 0.0)
    return h2 @ w3 + b3, h1, h2


def backward(w1, w2, w3, xs, h1, h2, dq):
    """Gradients of a scalar loss with upstream derivative ``dq`` w.r.t. the
    network output. The rectifier derivative at 0 is taken as 0."""
    gw3 = h2.T @ dq
    gb3 = dq.sum(axis=0)
    dh2 = (dq @ w3.T) * (h2 > 0.0)
    gw2 = h1.T @ dh2
    gb2 = dh2.sum(axis=0)
    dh1 = (dh2 @ w2.T) * (h1 > 0.0)
    gw1 = xs.T @ dh1
    gb1 = dh1.sum(axis=0)
    return gw1, gb1, gw2, gb2, gw3, gb3


def train_step(w1, b1, w2, b2, w3, b3, xs, targets, taken, lr):
    """One gradient-descent step on the masked mean squared error.

    Only the output of the taken action regresses toward its target; the
    weights are updated in place. Returns the pre-update loss.
    """
    n = xs.shape[0]
    q, h1, h2 = forward_cache(w1, b1, w2, b2, w3, b3, xs)
    rows = np.arange(n)
    diff = q[rows, taken] - targets[rows, taken]
    loss = float(np.mean(diff * diff))
    dq = np.zeros_like(q)
    dq[rows, taken] = 2.0 * diff / n
    gw1, gb1, gw2, gb2, gw3, gb3 = backward(w1, w2, w3, xs, h1, h2, dq)
    w1 -= lr * gw1
    b1 -= lr * gb1
    w2 -= lr * gw2
    b2 -= lr * gb2
    w3 -= lr * gw3
    b3 -= lr * gb3
    return loss
