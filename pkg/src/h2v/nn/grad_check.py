"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def grad_check(
    fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    eps: float = 1e-3,
    max_elements_per_param: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Compare analytic gradients of fn() against central differences.

    fn must rebuild the scalar loss from the current parameter values on
    every call. Returns the worst normalized error
    |analytic - numeric| / max(1e-8, |analytic| + |numeric|) over all
    checked elements (optionally a random subset per parameter).
    """
    for p in params:
        p.grad = None
    loss = fn()
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy()
                for p in params]
    for p in params:
        p.grad = None

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_elements_per_param is not None and flat.size > max_elements_per_param:
            gen = rng if rng is not None else np.random.default_rng(0)
            idx = gen.choice(flat.size, size=max_elements_per_param, replace=False)
        for i in idx:
            orig = flat[i]
            flat[i] = orig + eps
            hi = fn().item()
            flat[i] = orig - eps
            lo = fn().item()
            flat[i] = orig
            numeric = (hi - lo) / (2.0 * eps)
            ana = float(a.reshape(-1)[i])
            err = abs(ana - numeric) / max(1e-8, abs(ana) + abs(numeric))
            worst = max(worst, err)
    return worst
