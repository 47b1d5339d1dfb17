from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from core.autodiff import Tape
from core.errors import TrainingStateError


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, tape: Tape) -> None:
    """Apply one bias-corrected Adam update to every parameter on ``tape`` and zero the gradients."""
    if not tape.gradients_ready:
        raise TrainingStateError("adam_step called before backward(); no gradients to apply")

    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step

    for name, param in tape.parameters.items():
        grad = param.grad
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.m[name] = m
        state.v[name] = v

        m_hat = m / correction1
        v_hat = v / correction2
        param.data = param.data - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)

    tape.zero_grad()
