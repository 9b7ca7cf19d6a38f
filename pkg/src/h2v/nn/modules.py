"""Trainable building blocks: parameter containers and layer modules."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, InternalFault
from . import functional as F
from .tensor import Tensor


class Module:
    """Base class; discovers parameters from attributes in definition order."""

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> list[tuple[str, Tensor]]:
        out: list[tuple[str, Tensor]] = []
        for key, val in vars(self).items():
            name = f"{prefix}{key}" if not prefix else f"{prefix}.{key}"
            if isinstance(val, Tensor) and val.requires_grad:
                out.append((name, val))
            elif isinstance(val, Module):
                out.extend(val.named_parameters(name))
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        out.extend(item.named_parameters(f"{name}.{i}"))
        return out

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        missing = sorted(set(params) - set(state))
        extra = sorted(set(state) - set(params))
        if missing or extra:
            raise DataError(
                f"parameter name mismatch: missing={missing} unexpected={extra}"
            )
        for name, p in params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.data.shape:
                raise DataError(
                    f"shape mismatch for {name}: "
                    f"checkpoint {value.shape}, model {p.data.shape}"
                )
            p.data = value.copy()


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = np.sqrt(6.0 / max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        self.weight = Tensor(
            _he_uniform(rng, (out_features, in_features), in_features),
            requires_grad=True,
        )
        bound = 1.0 / np.sqrt(max(in_features, 1))
        self.bias = Tensor(
            rng.uniform(-bound, bound, size=(out_features,)), requires_grad=True
        )

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class Conv2d(Module):
    def __init__(self, in_ch: int, out_ch: int, kernel: int,
                 rng: np.random.Generator, stride: int = 1, padding: int = 0,
                 weight_scale: float = 1.0):
        fan_in = in_ch * kernel * kernel
        self.weight = Tensor(
            _he_uniform(rng, (out_ch, in_ch, kernel, kernel), fan_in) * weight_scale,
            requires_grad=True,
        )
        bound = 1.0 / np.sqrt(fan_in)
        self.bias = Tensor(rng.uniform(-bound, bound, size=(out_ch,)), requires_grad=True)
        self.stride = stride
        self.padding = padding

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias,
                        stride=self.stride, padding=self.padding)


class Bottleneck(Module):
    """Residual block: 1x1 reduce, 3x3, 1x1 expand, skip connection.

    The skip is the identity when input and output channel counts match
    and a 1x1 projection otherwise. The expanding conv starts at half
    scale so early residuals stay small.
    """

    def __init__(self, channels: int, mid: int, rng: np.random.Generator,
                 out_channels: int | None = None):
        out_channels = channels if out_channels is None else out_channels
        self.reduce = Conv2d(channels, mid, 1, rng)
        self.conv = Conv2d(mid, mid, 3, rng, padding=1)
        self.expand = Conv2d(mid, out_channels, 1, rng, weight_scale=0.5)
        self.project = (None if out_channels == channels
                        else Conv2d(channels, out_channels, 1, rng))

    def forward(self, x: Tensor) -> Tensor:
        y = self.reduce(x).relu()
        y = self.conv(y).relu()
        y = self.expand(y)
        skip = x if self.project is None else self.project(x)
        return (y + skip).relu()


class Mlp(Module):
    """Stack of fully connected layers with ReLU between them."""

    def __init__(self, sizes: list[int], rng: np.random.Generator):
        if len(sizes) < 2:
            raise InternalFault("mlp needs at least input and output sizes")
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]

    def forward(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = x.relu()
        return x
