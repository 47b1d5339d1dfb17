from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from core.autodiff import Tape, Tensor, concat, relu, reshape
from core.errors import ShapeError
from core.nn import DropoutContext, kaiming_uniform, linear, softmax

logger = logging.getLogger(__name__)


@dataclass
class DenseLayer:
    W: Tensor
    b: Tensor


@dataclass
class ClassifierHead:
    """Fully connected layers ending in 2 classes; dropout only after the hidden layers."""

    layers: list[DenseLayer] = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return int(self.layers[0].W.shape[0])


def build_classifier(
    tape: Tape,
    rng: np.random.Generator,
    input_dim: int,
    hidden_dim: int = 512,
    num_layers: int = 3,
    prefix: str = "classifier",
) -> ClassifierHead:
    widths = [input_dim] + [hidden_dim] * (num_layers - 1) + [2]
    layers = []
    for index, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        layers.append(
            DenseLayer(
                W=tape.parameter(f"{prefix}.{index}.W", kaiming_uniform(rng, fan_in, (fan_in, fan_out))),
                b=tape.parameter(f"{prefix}.{index}.b", np.zeros(fan_out), weight=False),
            )
        )
    return ClassifierHead(layers=layers)


def concat_features(x_p, x_d) -> Tensor:
    """Pair feature ``x_p ⊕ x_d``: protein part first."""
    return concat([x_p, x_d], axis=-1)


def predict_logits(head: ClassifierHead, x, dropout: DropoutContext) -> Tensor:
    """Softmax class probabilities; column 1 is the interaction probability."""
    x = x if isinstance(x, Tensor) else Tensor(x)
    single = len(x.shape) == 1
    if single:
        x = reshape(x, (1, x.shape[0]))
    if x.shape[-1] != head.input_dim:
        raise ShapeError(f"classifier expects width {head.input_dim}, got {x.shape}")

    hidden = x
    for layer in head.layers[:-1]:
        hidden = dropout(relu(linear(hidden, layer.W, layer.b)))
    last = head.layers[-1]
    probs = softmax(linear(hidden, last.W, last.b))
    return reshape(probs, (2,)) if single else probs
