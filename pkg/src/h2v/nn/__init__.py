"""Minimal float64 neural-network stack: autodiff, layers, optimizer, IO."""

from . import functional
from .checkpoint import load_weights, save_weights
from .grad_check import grad_check
from .modules import Bottleneck, Conv2d, Linear, Mlp, Module
from .optim import SGD, step_lr
from .tensor import Tensor, concat, stack_rows

__all__ = [
    "Tensor",
    "concat",
    "stack_rows",
    "functional",
    "Module",
    "Linear",
    "Conv2d",
    "Bottleneck",
    "Mlp",
    "SGD",
    "step_lr",
    "grad_check",
    "save_weights",
    "load_weights",
]
