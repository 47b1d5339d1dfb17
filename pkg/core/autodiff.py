"""Dense float64 tensors with a reverse-mode gradient tape.

Operations are plain functions. An operation records itself on a tape only when
one of its inputs is attached to a recording tape (i.e. derives from a
registered parameter), so pure inference builds no graph at all.
"""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from core.errors import ConfigurationError, ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    __slots__ = ("data", "grad", "tape", "requires_grad", "name")

    def __init__(
        self,
        data,
        *,
        tape: Optional["Tape"] = None,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.tape = tape
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape} requires_grad={self.requires_grad}>"


@dataclass(frozen=True)
class _Node:
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: BackwardFn


class Tape:
    """Ordered operation records plus the registry of trainable parameters."""

    def __init__(self) -> None:
        self.nodes: list[_Node] = []
        self.parameters: dict[str, Tensor] = {}
        self.weight_names: set[str] = set()
        self.recording = True
        self.gradients_ready = False

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------
    def parameter(self, name: str, value, *, weight: bool = True) -> Tensor:
        """Register a trainable tensor. ``weight=False`` keeps it out of the L2 penalty (biases)."""
        if name in self.parameters:
            raise ValueError(f"Parameter {name!r} is already registered")
        tensor = Tensor(np.array(value, dtype=np.float64, copy=True), tape=self, requires_grad=True, name=name)
        tensor.grad = np.zeros_like(tensor.data)
        self.parameters[name] = tensor
        if weight:
            self.weight_names.add(name)
        return tensor

    def weights(self) -> list[Tensor]:
        return [param for name, param in self.parameters.items() if name in self.weight_names]

    # ------------------------------------------------------------------
    # Recording
    # ------------------------------------------------------------------
    @contextmanager
    def no_grad(self) -> Iterator[None]:
        previous = self.recording
        self.recording = False
        try:
            yield
        finally:
            self.recording = previous

    def record(self, output: Tensor, inputs: Sequence[Tensor], backward: BackwardFn) -> None:
        self.nodes.append(_Node(output, tuple(inputs), backward))

    def discard(self) -> None:
        self.nodes.clear()

    # ------------------------------------------------------------------
    # Gradients
    # ------------------------------------------------------------------
    def backward(self, loss: Tensor) -> None:
        if loss.data.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got shape {loss.shape}")

        grads: dict[int, np.ndarray] = {}
        if loss.tape is self:
            grads[id(loss)] = np.ones_like(loss.data)

        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            if upstream is None:
                continue
            for tensor, grad in zip(node.inputs, node.backward(upstream)):
                if grad is None or not tensor.requires_grad:
                    continue
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad

        for param in self.parameters.values():
            grad = grads.get(id(param))
            if grad is not None:
                param.grad = param.grad + grad

        self.nodes.clear()
        self.gradients_ready = True

    def zero_grad(self) -> None:
        for param in self.parameters.values():
            param.grad = np.zeros_like(param.data)
        self.gradients_ready = False


# ----------------------------------------------------------------------
# Helpers
# ----------------------------------------------------------------------
def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def record_op(data: np.ndarray, inputs: Sequence[Tensor], backward: BackwardFn) -> Tensor:
    tape = next((t.tape for t in inputs if t.requires_grad and t.tape is not None), None)
    if tape is None or not tape.recording:
        return Tensor(data)
    out = Tensor(data, tape=tape, requires_grad=True)
    tape.record(out, inputs, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast(a: Tensor, b: Tensor, op: str) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from exc


# ----------------------------------------------------------------------
# Operations
# ----------------------------------------------------------------------
def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(g: np.ndarray):
        return g @ b.data.T, a.data.T @ g

    return record_op(a.data @ b.data, (a, b), backward)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast(a, b, "add")

    def backward(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record_op(a.data + b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast(a, b, "mul")

    def backward(g: np.ndarray):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return record_op(a.data * b.data, (a, b), backward)


def scale(a, factor: float) -> Tensor:
    a = as_tensor(a)

    def backward(g: np.ndarray):
        return (g * factor,)

    return record_op(a.data * factor, (a,), backward)


def relu(x) -> Tensor:
    x = as_tensor(x)
    active = x.data > 0.0

    def backward(g: np.ndarray):
        # subgradient 0 at exactly 0
        return (g * active,)

    return record_op(np.where(active, x.data, 0.0), (x,), backward)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot view {x.shape} as {tuple(shape)}") from exc

    def backward(g: np.ndarray):
        return (g.reshape(x.shape),)

    return record_op(out, (x,), backward)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("concat: nothing to concatenate")
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        shapes = ", ".join(str(p.shape) for p in parts)
        raise ShapeError(f"concat: incompatible shapes {shapes} on axis {axis}") from exc
    offsets = np.cumsum([p.shape[axis] for p in parts])[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, offsets, axis=axis))

    return record_op(out, parts, backward)


def gather_rows(x, index: np.ndarray) -> Tensor:
    x = as_tensor(x)
    index = np.asarray(index, dtype=np.int64)

    def backward(g: np.ndarray):
        grad = np.zeros_like(x.data)
        np.add.at(grad, index, g)
        return (grad,)

    return record_op(x.data[index], (x,), backward)


def segment_sum(x, segment_ids: np.ndarray, num_segments: int) -> Tensor:
    """Row-wise scatter-add: ``out[s] = sum of x[r] where segment_ids[r] == s``."""
    x = as_tensor(x)
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    if segment_ids.shape[0] != x.shape[0]:
        raise ShapeError(f"segment_sum: {segment_ids.shape[0]} ids for {x.shape[0]} rows")
    out = np.zeros((num_segments, *x.shape[1:]))
    np.add.at(out, segment_ids, x.data)

    def backward(g: np.ndarray):
        return (g[segment_ids],)

    return record_op(out, (x,), backward)


def segment_mean(x, segment_ids: np.ndarray, num_segments: int) -> Tensor:
    """Like :func:`segment_sum` but averaged; empty segments stay zero."""
    x = as_tensor(x)
    counts = np.bincount(np.asarray(segment_ids, dtype=np.int64), minlength=num_segments)
    inverse = 1.0 / np.maximum(counts, 1)
    return mul(segment_sum(x, segment_ids, num_segments), inverse.reshape((-1,) + (1,) * (x.data.ndim - 1)))


def sum_all(x) -> Tensor:
    x = as_tensor(x)

    def backward(g: np.ndarray):
        return (np.broadcast_to(g, x.shape).copy(),)

    return record_op(np.array(x.data.sum()), (x,), backward)


def square_sum(x) -> Tensor:
    x = as_tensor(x)

    def backward(g: np.ndarray):
        return (2.0 * x.data * g,)

    return record_op(np.array(np.sum(x.data * x.data)), (x,), backward)


def conv1d(x, kernel) -> Tensor:
    """Same-padded 1-D cross-correlation.

    ``x`` is ``(channels, length)`` or batched ``(batch, channels, length)``;
    ``kernel`` is ``(out, in, k)`` with odd ``k``.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if kernel.data.ndim != 3:
        raise ShapeError(f"conv1d: kernel must be (out, in, k), got {kernel.shape}")
    out_channels, in_channels, width = kernel.shape
    if width % 2 == 0:
        raise ConfigurationError(f"conv1d kernel size must be odd, got {width}")

    batched = x.data.ndim == 3
    signal = x.data if batched else x.data[None]
    if signal.ndim != 3 or signal.shape[1] != in_channels:
        raise ShapeError(f"conv1d: input {x.shape} does not match kernel {kernel.shape}")

    batch, _, length = signal.shape
    pad = width // 2
    padded = np.pad(signal, ((0, 0), (0, 0), (pad, pad)))
    cols = np.stack([padded[:, :, k : k + length] for k in range(width)], axis=2)
    cols = cols.reshape(batch, in_channels * width, length)
    flat_kernel = kernel.data.reshape(out_channels, in_channels * width)
    out = np.einsum("ok,bkl->bol", flat_kernel, cols)

    def backward(g: np.ndarray):
        g = g if batched else g[None]
        grad_kernel = np.einsum("bol,bkl->ok", g, cols).reshape(kernel.shape)
        grad_cols = np.einsum("ok,bol->bkl", flat_kernel, g).reshape(batch, in_channels, width, length)
        grad_padded = np.zeros_like(padded)
        for k in range(width):
            grad_padded[:, :, k : k + length] += grad_cols[:, :, k, :]
        grad_x = grad_padded[:, :, pad : pad + length]
        return (grad_x if batched else grad_x[0]), grad_kernel

    return record_op(out if batched else out[0], (x, kernel), backward)
