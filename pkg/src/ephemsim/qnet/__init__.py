from .backend import BACKEND, kernels
from .network import (
    QNetwork,
    TrainingConfig,
    forward,
    forward_batch,
    gradient_check,
    load_checkpoint,
    save_checkpoint,
    train_batch,
)

__all__ = [
    "BACKEND",
    "QNetwork",
    "TrainingConfig",
    "forward",
    "forward_batch",
    "gradient_check",
    "kernels",
    "load_checkpoint",
    "save_checkpoint",
    "train_batch",
]
