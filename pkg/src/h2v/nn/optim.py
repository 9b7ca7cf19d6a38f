"""Gradient descent with classical momentum and stepped learning-rate decay."""

from __future__ import annotations

import numpy as np

from ..errors import InternalFault
from .tensor import Tensor


def step_lr(base_lr: float, epoch: int, decay: float = 0.1, period: int = 10) -> float:
    """Learning rate after `epoch` full epochs: base * decay^(epoch // period)."""
    if period <= 0:
        return base_lr
    return base_lr * decay ** (epoch // period)


class SGD:
    """Stochastic gradient descent with momentum.

    v <- momentum * v + grad;  p <- p - lr * v
    """

    def __init__(self, named_params: list[tuple[str, Tensor]],
                 lr: float = 0.01, momentum: float = 0.9,
                 weight_decay: float = 0.0):
        self.named_params = list(named_params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.weight_decay = float(weight_decay)
        self._velocity = [np.zeros_like(p.data) for _, p in self.named_params]

    def zero_grad(self) -> None:
        for _, p in self.named_params:
            p.grad = None

    def step(self) -> None:
        for (name, p), v in zip(self.named_params, self._velocity):
            if p.grad is None:
                continue
            g = p.grad
            if not np.isfinite(g).all():
                raise InternalFault(f"non-finite gradient for parameter {name!r}")
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            v *= self.momentum
            v += g
            p.data = p.data - self.lr * v
