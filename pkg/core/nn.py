"""Neural building blocks on top of :mod:`core.autodiff`."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from core.autodiff import Tape, Tensor, add, as_tensor, matmul, mul, record_op, scale, square_sum
from core.errors import ConfigurationError, DataError, ShapeError

LOG_FLOOR = 1e-12


class DropoutMode(str, Enum):
    TRAIN = "train"
    MC_SAMPLE = "mc-sample"
    OFF = "off"


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate < 1.0:
        raise ConfigurationError(f"dropout rate must lie in [0, 1), got {rate}")


@dataclass(frozen=True)
class DropoutMask:
    """Inverted-dropout mask: entries are 0 or 1 / (1 - rate)."""

    rate: float
    mask: np.ndarray
    mode: DropoutMode

    @classmethod
    def sample(
        cls,
        shape: Sequence[int],
        rate: float,
        mode: DropoutMode,
        rng: Optional[np.random.Generator],
    ) -> "DropoutMask":
        _check_rate(rate)
        if mode is DropoutMode.OFF or rate == 0.0:
            return cls(rate, np.ones(tuple(shape)), mode)
        if rng is None:
            raise ConfigurationError("dropout sampling needs a seeded generator")
        keep = rng.random(tuple(shape)) >= rate
        return cls(rate, keep.astype(np.float64) / (1.0 - rate), mode)


def dropout(x, mask: DropoutMask) -> Tensor:
    x = as_tensor(x)
    _check_rate(mask.rate)
    if mask.mode is DropoutMode.OFF:
        return x
    if mask.mask.shape != x.shape:
        raise ShapeError(f"dropout: mask {mask.mask.shape} does not match input {x.shape}")
    return mul(x, mask.mask)


@dataclass
class DropoutContext:
    """Mode, rate and random stream shared by every dropout site of one forward pass."""

    mode: DropoutMode = DropoutMode.OFF
    rate: float = 0.0
    rng: Optional[np.random.Generator] = None

    def __post_init__(self) -> None:
        _check_rate(self.rate)

    def __call__(self, x: Tensor) -> Tensor:
        if self.mode is DropoutMode.OFF:
            return x
        return dropout(x, DropoutMask.sample(x.shape, self.rate, self.mode, self.rng))


# ----------------------------------------------------------------------
# Activations, layers and losses
# ----------------------------------------------------------------------
def softmax(x) -> Tensor:
    """Softmax over the last axis, stabilised by subtracting the row maximum."""
    x = as_tensor(x)
    if x.data.ndim == 0 or x.shape[-1] < 2:
        raise ShapeError(f"softmax needs at least 2 classes, got shape {x.shape}")
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=-1, keepdims=True)

    def backward(g: np.ndarray):
        return (probs * (g - (g * probs).sum(axis=-1, keepdims=True)),)

    return record_op(probs, (x,), backward)


def linear(x, weight: Tensor, bias: Tensor) -> Tensor:
    return add(matmul(x, weight), bias)


def kaiming_uniform(rng: np.random.Generator, fan_in: int, shape: Sequence[int]) -> np.ndarray:
    # std sqrt(2 / fan_in)
    bound = math.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=tuple(shape))


def cross_entropy_l2(pred, labels, tape: Optional[Tape], l2_lambda: float) -> Tensor:
    """Summed binary cross-entropy on softmax rows plus ``(lambda / 2) * ||W||^2``.

    Column 1 of ``pred`` is the interaction probability; column 0 is its
    complement. Only tensors registered as weights on ``tape`` are penalised.
    """
    pred = as_tensor(pred)
    labels = np.asarray(labels, dtype=np.float64).reshape(-1)
    if pred.data.ndim != 2 or pred.shape[1] != 2 or pred.shape[0] != labels.size:
        raise ShapeError(f"cross_entropy_l2: predictions {pred.shape} vs {labels.size} labels")
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise DataError("labels must be 0 or 1")
    if l2_lambda < 0:
        raise ConfigurationError(f"l2_lambda must be >= 0, got {l2_lambda}")

    positive = np.maximum(pred.data[:, 1], LOG_FLOOR)
    negative = np.maximum(pred.data[:, 0], LOG_FLOOR)
    value = -np.sum(labels * np.log(positive) + (1.0 - labels) * np.log(negative))

    def backward(g: np.ndarray):
        grad = np.zeros_like(pred.data)
        grad[:, 1] = np.where(pred.data[:, 1] > LOG_FLOOR, -labels / positive, 0.0)
        grad[:, 0] = np.where(pred.data[:, 0] > LOG_FLOOR, -(1.0 - labels) / negative, 0.0)
        return (grad * g,)

    loss = record_op(np.array(value), (pred,), backward)
    weights = tape.weights() if tape is not None else []
    if l2_lambda == 0.0 or not weights:
        return loss

    penalty = square_sum(weights[0])
    for weight in weights[1:]:
        penalty = add(penalty, square_sum(weight))
    return add(loss, scale(penalty, l2_lambda / 2.0))
