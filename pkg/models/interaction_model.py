from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from models.graph_model import MolGraph
from models.protein_model import ProteinEmbedding


class SplitMode(str, Enum):
    PRESPLIT = "presplit"
    RANDOM = "random-80-10-10"


@dataclass
class InteractionRecord:
    smiles: str
    protein_id: str
    label: int
    line: int = 0  # 1-based line in the source file, 0 when generated
    graph: MolGraph | None = field(default=None, repr=False, compare=False)
    protein: ProteinEmbedding | None = field(default=None, repr=False, compare=False)

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.smiles, self.protein_id, self.label)


@dataclass
class DatasetSplit:
    train: list[InteractionRecord]
    valid: list[InteractionRecord]
    test: list[InteractionRecord]
    split_mode: SplitMode = SplitMode.RANDOM
    seed: int = 0

    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.valid), len(self.test)
