from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ProteinEmbedding:
    """Per-protein features: a residue matrix ``(L, d)`` or a pooled vector ``(d,)``."""

    id: str
    features: np.ndarray

    @property
    def residue_level(self) -> bool:
        return self.features.ndim == 2

    @property
    def length(self) -> int:
        return int(self.features.shape[0]) if self.residue_level else 1

    @property
    def dim(self) -> int:
        return int(self.features.shape[-1])

    def as_matrix(self) -> np.ndarray:
        """Residue matrix view; a pooled vector counts as a single residue."""
        return self.features if self.residue_level else self.features.reshape(1, -1)
