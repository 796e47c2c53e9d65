"""
tensor_core/tensor.py
Dense tensors with reverse-mode automatic differentiation.

Every operation records its parents and a closure mapping the output gradient
to one gradient per parent. `backward` walks the recorded graph in reverse
topological order and accumulates gradients into leaf tensors.
"""
from __future__ import annotations

import contextvars
from contextlib import contextmanager
from typing import Callable, Iterator, Optional, Sequence, Union

import numpy as np

from tensor_core.errors import InvalidInputError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
BackwardFn = Callable[[np.ndarray], tuple[Optional[np.ndarray], ...]]

_DTYPES: dict[int, type] = {32: np.float32, 64: np.float64}

_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "sovmas_grad_enabled", default=True
)


def dtype_for(precision: int) -> np.dtype:
    """Map a precision in bits (32 | 64) to a numpy float dtype."""
    if precision not in _DTYPES:
        raise InvalidInputError(f"precision must be 32 or 64, got {precision}")
    return np.dtype(_DTYPES[precision])


@contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (inference, logging-only losses)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    """A dense float array with an optional gradient and autodiff lineage."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_backward")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: str = "",
        dtype: Optional[np.dtype] = None,
    ) -> None:
        if isinstance(data, Tensor):
            data = data.data
        arr = np.array(data, dtype=dtype, copy=True)
        if dtype is None and arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None

    # ── Construction helpers ─────────────────────────────────────────────────

    @classmethod
    def _wrap(cls, data: np.ndarray) -> "Tensor":
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = False
        out.grad = None
        out.name = ""
        out._parents = ()
        out._backward = None
        return out

    @classmethod
    def zeros(cls, shape: Sequence[int], dtype=np.float32, requires_grad: bool = False, name: str = "") -> "Tensor":
        return cls(np.zeros(tuple(shape), dtype=dtype), requires_grad=requires_grad, name=name)

    # ── Introspection ────────────────────────────────────────────────────────

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise InvalidInputError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = f"{self.name}, " if self.name else ""
        return f"Tensor({label}shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return self.shape[0]

    # ── Operator overloads ───────────────────────────────────────────────────

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        return add(other, self)

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return add(self, neg(lift(other, self)))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return add(other, neg(self))

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        return div(self, other)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return power(self, exponent)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index) -> "Tensor":
        return take(self, index)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        return transpose(self, axes or None)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return mean(self, axis=axis, keepdims=keepdims)


# ─────────────────────────────────────────────────────────────────────────────
# Graph plumbing
# ─────────────────────────────────────────────────────────────────────────────

def lift(value: ArrayLike, like: Tensor) -> Tensor:
    """Turn a scalar/array into a constant tensor with `like`'s dtype."""
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.asarray(value, dtype=like.dtype))


def record(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    """Wrap an op result, recording lineage when any parent needs a gradient."""
    out = Tensor._wrap(data)
    if _grad_enabled.get() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward_fn
    return out


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor) -> None:
    """
    Propagate d(loss)/d(leaf) into every reachable leaf with requires_grad.

    Gradients accumulate additively into `leaf.grad`, both across multiple uses
    inside one graph and across repeated calls (call `zero_grad` in between).
    """
    if loss.size != 1:
        raise InvalidInputError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return

    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        grad = pending.pop(id(node), None)
        if grad is None:
            continue
        if node.is_leaf:
            grad = np.array(grad, dtype=node.dtype).reshape(node.shape)
            node.grad = grad if node.grad is None else node.grad + grad
            continue
        parent_grads = node._backward(grad)
        for parent, pgrad in zip(node._parents, parent_grads):
            if pgrad is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pgrad if key not in pending else pending[key] + pgrad


# ─────────────────────────────────────────────────────────────────────────────
# Elementary operations
# ─────────────────────────────────────────────────────────────────────────────

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a = a if isinstance(a, Tensor) else lift(a, b)
    b = lift(b, a)
    a_shape, b_shape = a.shape, b.shape

    def _backward(g: np.ndarray):
        return unbroadcast(g, a_shape), unbroadcast(g, b_shape)

    return record(a.data + b.data, (a, b), _backward)


def neg(a: Tensor) -> Tensor:
    return record(-a.data, (a,), lambda g: (-g,))


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a = a if isinstance(a, Tensor) else lift(a, b)
    b = lift(b, a)

    def _backward(g: np.ndarray):
        return unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)

    return record(a.data * b.data, (a, b), _backward)


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a = a if isinstance(a, Tensor) else lift(a, b)
    b = lift(b, a)

    def _backward(g: np.ndarray):
        return (
            unbroadcast(g / b.data, a.shape),
            unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return record(a.data / b.data, (a, b), _backward)


def power(a: Tensor, exponent: float) -> Tensor:
    out = a.data ** exponent

    def _backward(g: np.ndarray):
        return (g * exponent * a.data ** (exponent - 1),)

    return record(out, (a,), _backward)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return record(out, (a,), lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    return record(np.log(a.data), (a,), lambda g: (g / a.data,))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return record(out, (a,), lambda g: (g * (1.0 - out * out),))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, batch axes broadcast."""
    if a.ndim < 2 or b.ndim < 2:
        raise InvalidInputError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise InvalidInputError(f"matmul inner extents differ: {a.shape} @ {b.shape}")

    def _backward(g: np.ndarray):
        ga = unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
        gb = unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
        return ga, gb

    return record(a.data @ b.data, (a, b), _backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    src = a.shape
    return record(a.data.reshape(tuple(shape)), (a,), lambda g: (g.reshape(src),))


def transpose(a: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(axes) if axes else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return record(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    src = a.shape

    def _backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, src),)

    return record(a.data.sum(axis=axis, keepdims=keepdims), (a,), _backward)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = tuple(tensors)
    if not tensors:
        raise InvalidInputError("concat needs at least one tensor")
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=axis))

    return record(np.concatenate([t.data for t in tensors], axis=axis), tensors, _backward)


def take(a: Tensor, index) -> Tensor:
    """Basic or advanced indexing; gradients scatter-add back to the source."""
    src_shape, dtype = a.shape, a.dtype

    def _backward(g: np.ndarray):
        full = np.zeros(src_shape, dtype=dtype)
        np.add.at(full, index, g)
        return (full,)

    return record(a.data[index], (a,), _backward)


def embedding(table: Tensor, ids: np.ndarray) -> Tensor:
    """Row lookup `table[ids]` for an integer id array of any shape."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise InvalidInputError(
            f"token id out of range [0, {table.shape[0]}): min={ids.min()}, max={ids.max()}"
        )
    return take(table, ids)
