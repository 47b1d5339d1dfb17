"""MC-dropout sampling and the epistemic / aleatoric split of the predictive variance."""
from __future__ import annotations

import hashlib
import logging
from typing import Sequence

import numpy as np

from core.errors import ConfigurationError, DataError
from core.nn import DropoutContext, DropoutMode
from core.seeding import stream
from models.graph_model import MolGraph
from models.prediction_model import MCPrediction, UncertaintyKind
from models.protein_model import ProteinEmbedding
from models.settings_model import MCDropoutConfig
from services.model_service import DPIModel

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-9


def decompose_variance(samples) -> tuple[np.ndarray, np.ndarray]:
    """Epistemic ``mean((y_t - y)(y_t - y)^T)`` and aleatoric ``mean(diag(y_t) - y_t y_t^T)``."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise DataError(f"expected a (T, classes) sample matrix, got shape {samples.shape}")
    row_error = np.abs(samples.sum(axis=1) - 1.0)
    if np.any(row_error > ROW_SUM_TOLERANCE):
        bad = int(np.argmax(row_error))
        raise DataError(f"sample row {bad} sums to {samples[bad].sum()!r}, not 1")

    t = samples.shape[0]
    mean = samples.mean(axis=0)
    centered = samples - mean
    epistemic = centered.T @ centered / t
    epistemic = (epistemic + epistemic.T) / 2.0
    aleatoric = np.diag(mean) - samples.T @ samples / t
    aleatoric = (aleatoric + aleatoric.T) / 2.0
    return epistemic, aleatoric


def _prediction(samples: np.ndarray) -> MCPrediction:
    epistemic, aleatoric = decompose_variance(samples)
    return MCPrediction(samples=samples, mean=samples.mean(axis=0), epistemic=epistemic, aleatoric=aleatoric)


def pair_key(graph: MolGraph, protein: ProteinEmbedding) -> int:
    """Stable 63-bit digest of a drug graph and a protein id."""
    digest = hashlib.blake2b(digest_size=8)
    digest.update(protein.id.encode("utf-8"))
    for array in (graph.node_feats, graph.edges, graph.edge_feats):
        digest.update(np.ascontiguousarray(array, dtype=np.float64).tobytes())
    return int.from_bytes(digest.digest(), "little") >> 1


def mc_predict_batch(
    model: DPIModel,
    graphs: Sequence[MolGraph],
    proteins: Sequence[ProteinEmbedding],
    cfg: MCDropoutConfig,
) -> list[MCPrediction]:
    """T stochastic passes per pair; masks for pass t come from stream ``(rng_seed, t, pair_key)``.

    A pair's samples depend only on the pair itself, never on its position
    in the call or on the other pairs sampled with it.
    """
    if cfg.mc_samples < 1:
        raise ConfigurationError(f"mc_samples must be >= 1, got {cfg.mc_samples}")
    if len(graphs) != len(proteins):
        raise ConfigurationError(f"{len(graphs)} drugs but {len(proteins)} proteins")

    t_total = cfg.mc_samples
    predictions = []
    for graph, protein in zip(graphs, proteins):
        key = pair_key(graph, protein)
        samples = np.zeros((t_total, 2))
        for t in range(t_total):
            dropout = DropoutContext(DropoutMode.MC_SAMPLE, cfg.dropout_rate, stream(cfg.rng_seed, t, key))
            samples[t] = model.predict([graph], [protein], dropout)[0]
        predictions.append(_prediction(samples))

    logger.debug("MC sampling: %d pairs x %d passes", len(graphs), t_total)
    return predictions


def mc_predict(model: DPIModel, graph: MolGraph, protein: ProteinEmbedding, cfg: MCDropoutConfig) -> MCPrediction:
    return mc_predict_batch(model, [graph], [protein], cfg)[0]


def uncertainty(prediction: MCPrediction, kind: UncertaintyKind | str) -> float:
    kind = UncertaintyKind(kind)
    if kind is UncertaintyKind.EPISTEMIC:
        return float(np.trace(prediction.epistemic))
    if kind is UncertaintyKind.ALEATORIC:
        return float(np.trace(prediction.aleatoric))
    return float(np.trace(prediction.epistemic) + np.trace(prediction.aleatoric))


def confidence_score(prediction: MCPrediction, kind: UncertaintyKind | str) -> float:
    """Negated uncertainty trace: larger means more confident (ordering only)."""
    return -uncertainty(prediction, kind)
