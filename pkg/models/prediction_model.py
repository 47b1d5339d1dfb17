from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class UncertaintyKind(str, Enum):
    EPISTEMIC = "epistemic"
    ALEATORIC = "aleatoric"
    TOTAL = "total"


@dataclass(frozen=True)
class MCPrediction:
    """T sampled softmax rows, their mean and the 2x2 variance decomposition."""

    samples: np.ndarray
    mean: np.ndarray
    epistemic: np.ndarray
    aleatoric: np.ndarray

    @property
    def p_interaction(self) -> float:
        return float(self.mean[1])

    @property
    def t(self) -> int:
        return int(self.samples.shape[0])
