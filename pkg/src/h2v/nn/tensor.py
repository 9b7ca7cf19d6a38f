"""Reverse-mode automatic differentiation over float64 numpy arrays.

A Tensor wraps an ndarray and records the ops that produced it; calling
backward() on a scalar result accumulates gradients into every reachable
tensor created with requires_grad=True. Every op output is checked for
NaN/Inf and faults immediately, so numerical blow-ups surface at the op
that caused them instead of corrupting a training run.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import InternalFault


def _check_finite(data: np.ndarray, op: str) -> None:
    if not np.isfinite(data).all():
        raise InternalFault(f"non-finite values produced by op {op!r}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Array node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "_backward", "_parents", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._backward: Callable[[], None] | None = None
        self._parents: tuple["Tensor", ...] = ()
        self.name = name
        if self.requires_grad:
            _check_finite(self.data, "leaf")

    # -- graph construction ------------------------------------------------

    @staticmethod
    def _make(
        data: np.ndarray,
        parents: Sequence["Tensor"],
        op: str,
        backward: Callable[["Tensor"], Callable[[], None]],
    ) -> "Tensor":
        _check_finite(data, op)
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward(out)
        return out

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy() if g.base is not None or g.flags.writeable is False else g
        else:
            self.grad = self.grad + g

    # -- shape / repr --------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad}{tag})"

    # -- elementwise arithmetic ----------------------------------------------

    @staticmethod
    def _lift(v) -> "Tensor":
        return v if isinstance(v, Tensor) else Tensor(np.asarray(v, dtype=np.float64))

    def __add__(self, other) -> "Tensor":
        a, b = self, Tensor._lift(other)

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(_unbroadcast(out.grad, a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(out.grad, b.data.shape))
            return run

        return Tensor._make(a.data + b.data, (a, b), "add", bw)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        a = self

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(-out.grad)
            return run

        return Tensor._make(-a.data, (a,), "neg", bw)

    def __sub__(self, other) -> "Tensor":
        return self + (-Tensor._lift(other))

    def __rsub__(self, other) -> "Tensor":
        return Tensor._lift(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        a, b = self, Tensor._lift(other)

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(_unbroadcast(out.grad * b.data, a.data.shape))
                if b.requires_grad:
                    b._accumulate(_unbroadcast(out.grad * a.data, b.data.shape))
            return run

        return Tensor._make(a.data * b.data, (a, b), "mul", bw)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        b = Tensor._lift(other)
        return self * (b ** -1.0)

    def __rtruediv__(self, other) -> "Tensor":
        return Tensor._lift(other) * (self ** -1.0)

    def __pow__(self, k: float) -> "Tensor":
        if not isinstance(k, (int, float)):
            raise TypeError("tensor exponent must be a python scalar")
        a = self

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(out.grad * (k * a.data ** (k - 1.0)))
            return run

        return Tensor._make(a.data ** float(k), (a,), "pow", bw)

    def square(self) -> "Tensor":
        return self * self

    def relu(self) -> "Tensor":
        a = self
        mask = a.data > 0.0

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(out.grad * mask)
            return run

        return Tensor._make(np.where(mask, a.data, 0.0), (a,), "relu", bw)

    # -- linear algebra --------------------------------------------------------

    def __matmul__(self, other) -> "Tensor":
        a, b = self, Tensor._lift(other)
        if a.data.ndim != 2 or b.data.ndim != 2:
            raise InternalFault("matmul expects 2-D operands")

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(out.grad @ b.data.T)
                if b.requires_grad:
                    b._accumulate(a.data.T @ out.grad)
            return run

        return Tensor._make(a.data @ b.data, (a, b), "matmul", bw)

    def transpose(self) -> "Tensor":
        a = self
        if a.data.ndim != 2:
            raise InternalFault("transpose expects a 2-D tensor")

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(out.grad.T)
            return run

        return Tensor._make(np.ascontiguousarray(a.data.T), (a,), "transpose", bw)

    # -- reductions / shaping ---------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        a = self

        def bw(out):
            def run():
                if not a.requires_grad:
                    return
                g = out.grad
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                a._accumulate(np.broadcast_to(g, a.data.shape).copy())
            return run

        return Tensor._make(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum", bw)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            ax = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.data.shape[i] for i in ax]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self

        def bw(out):
            def run():
                if a.requires_grad:
                    a._accumulate(out.grad.reshape(a.data.shape))
            return run

        return Tensor._make(a.data.reshape(shape), (a,), "reshape", bw)

    # -- backward pass -----------------------------------------------------------

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise InternalFault("backward() without grad needs a scalar output")
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != self.data.shape:
                raise InternalFault("backward grad shape mismatch")

        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        self._accumulate(grad)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()
                node.grad = None if node is not self and node._parents else node.grad


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Concatenate along an axis; gradient splits back to each input."""
    parts = [Tensor._lift(t) for t in tensors]
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def bw(out):
        def run():
            for p, s, e in zip(parts, offsets[:-1], offsets[1:]):
                if p.requires_grad:
                    idx = [slice(None)] * out.grad.ndim
                    idx[axis] = slice(int(s), int(e))
                    p._accumulate(out.grad[tuple(idx)])
        return run

    return Tensor._make(
        np.concatenate([p.data for p in parts], axis=axis), parts, "concat", bw
    )


def stack_rows(tensors: Sequence[Tensor]) -> Tensor:
    """Stack scalar/1-D tensors into one vector (used for per-item scores)."""
    parts = [t.reshape(-1) for t in tensors]
    return concat(parts, axis=0)
