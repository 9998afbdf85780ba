"""Feed-forward Q-value approximator with from-scratch backpropagation.

Architecture: input 6 -> two rectified hidden layers of 24 -> linear
output of 5 (one Q-value per action). Training is plain stochastic
gradient descent on the mean squared error of the taken-action outputs;
no momentum or adaptive scaling, so every update is hand-checkable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .backend import kernels

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.001
    batch_size: int = 50
    gamma: float = 0.95

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class QNetwork:
    """Weights plus the forward/update operations, dispatched to the active
    kernel backend."""

    def __init__(self, input_dim: int = 6, hidden_dim: int = 24, output_dim: int = 5, seed: int = 0):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.output_dim = output_dim
        self.seed = seed
        self.train_steps = 0
        rng = np.random.default_rng(seed)
        # Uniform init scaled by 1/sqrt(fan_in); biases start at zero.
        self.w1 = self._init_layer(rng, input_dim, hidden_dim)
        self.b1 = np.zeros(hidden_dim)
        self.w2 = self._init_layer(rng, hidden_dim, hidden_dim)
        self.b2 = np.zeros(hidden_dim)
        self.w3 = self._init_layer(rng, hidden_dim, output_dim)
        self.b3 = np.zeros(output_dim)

    @staticmethod
    def _init_layer(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, (fan_in, fan_out))

    @property
    def params(self) -> tuple[np.ndarray, ...]:
        return self.w1, self.b1, self.w2, self.b2, self.w3, self.b3

    def copy_weights_from(self, other: "QNetwork") -> None:
        for mine, theirs in zip(self.params, other.params):
            np.copyto(mine, theirs)

    def clone(self) -> "QNetwork":
        out = QNetwork(self.input_dim, self.hidden_dim, self.output_dim, self.seed)
        out.copy_weights_from(self)
        out.train_steps = self.train_steps
        return out

    def assert_finite(self) -> None:
        for p in self.params:
            if not np.all(np.isfinite(p)):
                raise FloatingPointError("non-finite network parameters after update")


def forward(net: QNetwork, state_vec: np.ndarray) -> np.ndarray:
    """Q-values for one state vector."""
    x = np.ascontiguousarray(state_vec, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise ValueError(f"expected input of shape ({net.input_dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite network input")
    return kernels.forward_single(*net.params, x)


def forward_batch(net: QNetwork, states: np.ndarray) -> np.ndarray:
    xs = np.ascontiguousarray(states, dtype=np.float64)
    return kernels.forward_batch(*net.params, xs)


def train_batch(
    net: QNetwork,
    inputs: np.ndarray,
    targets: np.ndarray,
    mask: np.ndarray,
    cfg: TrainingConfig,
) -> float:
    """One SGD step on the masked MSE; only the taken-action outputs
    regress. Returns the pre-update loss."""
    xs = np.ascontiguousarray(inputs, dtype=np.float64)
    ts = np.ascontiguousarray(targets, dtype=np.float64)
    taken = np.ascontiguousarray(mask, dtype=np.int64)
    if not (xs.shape[0] == ts.shape[0] == taken.shape[0]):
        raise ValueError("inconsistent batch sizes")
    loss = kernels.train_step(*net.params, xs, ts, taken, cfg.learning_rate)
    net.train_steps += 1
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite training loss {loss!r}")
    # A weight that turns non-finite poisons the very next loss, so the
    # full parameter sweep only needs to run periodically.
    if net.train_steps % 256 == 0:
        net.assert_finite()
    return float(loss)


def gradient_check(net: QNetwork, state_vec: np.ndarray, eps: float = 1e-5, seed: int = 0) -> float:
    """Max relative discrepancy between backprop and central finite
    differences, over every parameter, for a random full-output MSE loss."""
    if not 0.0 < eps <= 1e-2:
        raise ValueError("eps must lie in (0, 1e-2]")
    x = np.ascontiguousarray(state_vec, dtype=np.float64).reshape(1, -1)
    target = np.random.default_rng(seed).normal(0.0, 1.0, (1, net.output_dim))

    def loss_value() -> float:
        q = kernels.forward_batch(*net.params, x)
        return float(np.sum((q - target) ** 2))

    q, h1, h2 = kernels.forward_cache(*net.params, x)
    dq = 2.0 * (q - target)
    analytic = kernels.backward(net.w1, net.w2, net.w3, x, h1, h2, dq)

    worst = 0.0
    for param, grad in zip((net.w1, net.b1, net.w2, net.b2, net.w3, net.b3), analytic):
        flat = param.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            plus = loss_value()
            flat[i] = orig - eps
            minus = loss_value()
            flat[i] = orig
            numeric = (plus - minus) / (2.0 * eps)
            denom = max(abs(gflat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


def save_checkpoint(net: QNetwork, path: str, extra_meta: dict | None = None) -> None:
    """Write weights plus a JSON header (layer sizes, seed, training step
    count, checkpoint version) to an .npz file."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "layer_sizes": [net.input_dim, net.hidden_dim, net.hidden_dim, net.output_dim],
        "seed": net.seed,
        "train_steps": net.train_steps,
    }
    if extra_meta:
        meta.update(extra_meta)
    np.savez(
        path,
        header=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
        w1=net.w1, b1=net.b1, w2=net.w2, b2=net.b2, w3=net.w3, b3=net.b3,
    )


def load_checkpoint(path: str) -> tuple[QNetwork, dict]:
    """Rebuild a network from a checkpoint; returns (network, header)."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["header"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
        sizes = meta["layer_sizes"]
        expected = {
            "w1": (sizes[0], sizes[1]), "b1": (sizes[1],),
            "w2": (sizes[1], sizes[2]), "b2": (sizes[2],),
            "w3": (sizes[2], sizes[3]), "b3": (sizes[3],),
        }
        for name, shape in expected.items():
            if data[name].shape != shape:
                raise ValueError(f"checkpoint field {name} has shape {data[name].shape}, expected {shape}")
        net = QNetwork(sizes[0], sizes[1], sizes[3], seed=meta["seed"])
        net.w1, net.b1 = data["w1"].copy(), data["b1"].copy()
        net.w2, net.b2 = data["w2"].copy(), data["b2"].copy()
        net.w3, net.b3 = data["w3"].copy(), data["b3"].copy()
        net.train_steps = meta["train_steps"]
    return net, meta
