"""Interaction datasets: TSV ingestion, protein resolution and train/valid/test splits."""
from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from core.errors import DataError, IngestionError, UsageError
from models.graph_model import MolGraph
from models.interaction_model import DatasetSplit, InteractionRecord, SplitMode
from models.protein_model import ProteinEmbedding
from models.settings_model import StubEmbedderConfig
from services.featurizer_service import featurize
from services.protein_service import CANONICAL_RESIDUES, stub_embed
from services.smiles_service import parse_smiles

logger = logging.getLogger(__name__)

COLUMNS = ("smiles", "protein", "label")
MAX_BAD_FRACTION = 0.01
MIN_RANDOM_SPLIT = 10
MIN_SEQUENCE_LENGTH = 10

_SEQUENCE = re.compile(r"^[A-Za-z]+$")


# ----------------------------------------------------------------------
# Ingestion
# ----------------------------------------------------------------------
def read_table(path: str | Path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"data file not found: {path}")
    try:
        frame = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise IngestionError(f"{path}: missing header 'smiles<TAB>protein<TAB>label'") from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise IngestionError(f"{path}: {exc}") from exc

    missing = [c for c in COLUMNS if c not in frame.columns]
    if missing:
        raise IngestionError(f"{path}: missing column(s) {', '.join(missing)}")
    return frame


class ProteinResolver:
    """Protein column value -> embedding: known ids via the map, raw sequences via the stub."""

    def __init__(
        self,
        embeddings: Optional[Mapping[str, ProteinEmbedding]] = None,
        stub: StubEmbedderConfig = StubEmbedderConfig(),
    ) -> None:
        self.embeddings = dict(embeddings or {})
        dims = {e.dim for e in self.embeddings.values()}
        if dims and stub.stub_dim not in dims:
            # stub vectors must line up with the loaded width
            stub = stub.model_copy(update={"stub_dim": dims.pop()})
        self.stub = stub
        self._cache: dict[str, ProteinEmbedding] = {}

    @property
    def dim(self) -> int:
        return self.stub.stub_dim

    def resolve(self, protein: str) -> ProteinEmbedding:
        if protein in self.embeddings:
            return self.embeddings[protein]
        if protein in self._cache:
            return self._cache[protein]
        if not self._is_sequence(protein):
            raise DataError(f"unknown protein id {protein!r}")
        embedding = stub_embed(protein, self.stub)
        self._cache[protein] = embedding
        return embedding

    def _is_sequence(self, protein: str) -> bool:
        if not _SEQUENCE.match(protein):
            return False
        if not self.embeddings:
            return True
        # with a loaded map, short or non-residue letter strings are ids (EGFR, KRAS)
        return len(protein) >= MIN_SEQUENCE_LENGTH and set(protein) <= CANONICAL_RESIDUES


class GraphCache:
    def __init__(self) -> None:
        self._graphs: dict[str, MolGraph] = {}

    def get(self, smiles: str) -> MolGraph:
        graph = self._graphs.get(smiles)
        if graph is None:
            graph = featurize(parse_smiles(smiles))
            self._graphs[smiles] = graph
        return graph


def _parse_label(raw: str) -> int:
    value = raw.strip()
    if value not in ("0", "1"):
        raise DataError(f"label must be 0 or 1, got {raw!r}")
    return int(value)


def ingest(
    path: str | Path,
    resolver: Optional[ProteinResolver] = None,
    graphs: Optional[GraphCache] = None,
) -> list[InteractionRecord]:
    """Read ``smiles<TAB>protein<TAB>label`` rows; abort when more than 1% of the rows are bad."""
    frame = read_table(path)
    resolver = resolver or ProteinResolver()
    graphs = graphs or GraphCache()

    records: list[InteractionRecord] = []
    bad_rows: list[tuple[int, str]] = []
    for position, row in enumerate(frame.itertuples(index=False)):
        line = position + 2  # header is line 1
        smiles, protein = str(row.smiles).strip(), str(row.protein).strip()
        try:
            if not smiles or not protein:
                raise DataError("empty smiles or protein field")
            label = _parse_label(str(row.label))
            record = InteractionRecord(
                smiles=smiles,
                protein_id=protein,
                label=label,
                line=line,
                graph=graphs.get(smiles),
                protein=resolver.resolve(protein),
            )
        except DataError as exc:
            logger.warning("Rejected %s line %d: %s", path, line, exc)
            bad_rows.append((line, str(exc)))
            continue
        records.append(record)

    total = len(frame)
    if bad_rows and len(bad_rows) > MAX_BAD_FRACTION * total:
        raise IngestionError(f"{path}: {len(bad_rows)} of {total} rows rejected", bad_rows)

    logger.info("Ingested %d records from %s (%d rejected)", len(records), path, len(bad_rows))
    return records


def write_dataset(path: str | Path, records: Sequence[InteractionRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [(r.smiles, r.protein_id, r.label) for r in records],
        columns=list(COLUMNS),
    )
    frame.to_csv(path, sep="\t", index=False, lineterminator="\n")
    return path


# ----------------------------------------------------------------------
# Splits
# ----------------------------------------------------------------------
def split(records: Sequence[InteractionRecord], mode: SplitMode | str = SplitMode.RANDOM, seed: int = 0) -> DatasetSplit:
    """Seeded 80/10/10 split: sizes floor(0.8n), floor(0.1n) and the remainder."""
    mode = SplitMode(mode)
    if mode is SplitMode.PRESPLIT:
        raise UsageError("presplit datasets are read with load_presplit(train, valid, test)")
    n = len(records)
    if n < MIN_RANDOM_SPLIT:
        raise DataError(f"random split needs at least {MIN_RANDOM_SPLIT} records, got {n}")

    order = np.random.default_rng(seed).permutation(n)
    n_train = (8 * n) // 10
    n_valid = n // 10
    shuffled = [records[i] for i in order]
    return DatasetSplit(
        train=shuffled[:n_train],
        valid=shuffled[n_train : n_train + n_valid],
        test=shuffled[n_train + n_valid :],
        split_mode=SplitMode.RANDOM,
        seed=seed,
    )


def load_presplit(
    train_path: str | Path,
    valid_path: str | Path,
    test_path: str | Path,
    resolver: Optional[ProteinResolver] = None,
) -> DatasetSplit:
    resolver = resolver or ProteinResolver()
    graphs = GraphCache()
    return DatasetSplit(
        train=ingest(train_path, resolver, graphs),
        valid=ingest(valid_path, resolver, graphs),
        test=ingest(test_path, resolver, graphs),
        split_mode=SplitMode.PRESPLIT,
    )
