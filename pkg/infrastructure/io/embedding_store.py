"""Protein embedding files: ``#dim=d`` TSV of pooled vectors, or ``.npz`` residue matrices."""
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Mapping

import numpy as np

from core.errors import IngestionError, UsageError
from models.protein_model import ProteinEmbedding

logger = logging.getLogger(__name__)

HEADER_PREFIX = "#dim="


def load_embeddings(path: str | Path) -> dict[str, ProteinEmbedding]:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"embedding file not found: {path}")
    if path.suffix == ".npz":
        return _load_npz(path)
    return _load_tsv(path)


def _load_tsv(path: Path) -> dict[str, ProteinEmbedding]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise IngestionError(f"{path}: not UTF-8 text") from exc

    content = [(number, line) for number, line in enumerate(lines, start=1) if line.strip()]
    if not content:
        return {}

    header_line, header = content[0]
    if not header.startswith(HEADER_PREFIX):
        raise IngestionError(f"{path}: missing '{HEADER_PREFIX}d' header", [(header_line, header[:40])])
    try:
        dim = int(header[len(HEADER_PREFIX):].strip())
    except ValueError as exc:
        raise IngestionError(f"{path}: bad header", [(header_line, header[:40])]) from exc
    if dim < 1:
        raise IngestionError(f"{path}: dimension must be >= 1", [(header_line, header)])

    embeddings: dict[str, ProteinEmbedding] = {}
    for number, line in content[1:]:
        fields = line.rstrip("\r\n").split("\t")
        protein_id, values = fields[0].strip(), fields[1:]
        if not protein_id:
            raise IngestionError(f"{path}: empty protein id", [(number, "empty id")])
        if protein_id in embeddings:
            raise IngestionError(f"{path}: duplicate protein id {protein_id!r}", [(number, "duplicate id")])
        if len(values) != dim:
            raise IngestionError(
                f"{path}: protein {protein_id!r} has {len(values)} values, header says {dim}",
                [(number, f"width {len(values)} != {dim}")],
            )
        try:
            vector = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise IngestionError(f"{path}: malformed number for {protein_id!r}", [(number, str(exc))]) from exc
        if not np.all(np.isfinite(vector)):
            raise IngestionError(f"{path}: non-finite value for {protein_id!r}", [(number, "non-finite")])
        embeddings[protein_id] = ProteinEmbedding(id=protein_id, features=vector)

    logger.info("Loaded %d protein embeddings (d=%d) from %s", len(embeddings), dim, path)
    return embeddings


def _load_npz(path: Path) -> dict[str, ProteinEmbedding]:
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise IngestionError(f"{path}: unreadable archive ({exc})") from exc

    embeddings: dict[str, ProteinEmbedding] = {}
    dim = None
    with archive:
        for position, name in enumerate(sorted(archive.files), start=1):
            matrix = np.asarray(archive[name], dtype=np.float64)
            if matrix.ndim == 1:
                matrix = matrix.reshape(1, -1)
            if matrix.ndim != 2 or matrix.shape[0] == 0:
                raise IngestionError(f"{path}: {name!r} is not an (L, d) matrix with L >= 1", [(position, str(matrix.shape))])
            if dim is None:
                dim = matrix.shape[1]
            elif matrix.shape[1] != dim:
                raise IngestionError(f"{path}: {name!r} has width {matrix.shape[1]}, expected {dim}", [(position, name)])
            if not np.all(np.isfinite(matrix)):
                raise IngestionError(f"{path}: non-finite value in {name!r}", [(position, name)])
            embeddings[name] = ProteinEmbedding(id=name, features=matrix)

    logger.info("Loaded %d residue-level embeddings from %s", len(embeddings), path)
    return embeddings


def write_embeddings(path: str | Path, embeddings: Mapping[str, ProteinEmbedding]) -> Path:
    """Pooled vectors as ``#dim=d`` TSV; values use ``repr`` so they read back exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dims = {e.dim for e in embeddings.values()}
    if len(dims) > 1:
        raise IngestionError(f"cannot write mixed widths {sorted(dims)}")
    dim = dims.pop() if dims else 0
    lines = [f"{HEADER_PREFIX}{dim}"]
    for protein_id, embedding in embeddings.items():
        vector = embedding.features if not embedding.residue_level else embedding.as_matrix().mean(axis=0)
        if not all(math.isfinite(v) for v in vector):
            raise IngestionError(f"non-finite value for {protein_id!r}")
        lines.append("\t".join([protein_id, *(repr(float(v)) for v in vector)]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
