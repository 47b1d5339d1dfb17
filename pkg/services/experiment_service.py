"""Evaluation and the uncertainty experiments: noise robustness, training size, confidence curves."""
from __future__ import annotations

import logging
import math
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from core.errors import ConfigurationError, DataError, MetricError
from core.seeding import stream
from models.interaction_model import DatasetSplit, InteractionRecord
from models.prediction_model import MCPrediction, UncertaintyKind
from models.protein_model import ProteinEmbedding
from models.report_model import CurvePoint, MetricsReport, NoiseSweepRow, SizeSweepRow, SubsetMetrics
from models.settings_model import MCDropoutConfig, NoiseConfig, RunConfig
from services.bayes_service import confidence_score, mc_predict_batch, uncertainty
from services.metrics_service import precision_recall_accuracy, roc_auc, split_by_entities
from services.model_service import DPIModel
from services.training_service import deterministic_scores, train

logger = logging.getLogger(__name__)

PERCENTILES = tuple(range(10, 101, 10))
SIZE_FRACTIONS = (1.0, 0.5, 0.25)
MIN_BATCHES_AT_SMALLEST = 10


# ----------------------------------------------------------------------
# Scoring
# ----------------------------------------------------------------------
def mc_predictions(model: DPIModel, records: Sequence[InteractionRecord], mc: MCDropoutConfig) -> list[MCPrediction]:
    return mc_predict_batch(model, [r.graph for r in records], [r.protein for r in records], mc)


def _safe_auc(scores, labels) -> Optional[float]:
    try:
        return roc_auc(scores, labels)
    except MetricError:
        return None


def _metrics(scores: np.ndarray, labels: np.ndarray) -> tuple[Optional[float], float, Optional[float], Optional[float]]:
    precision, recall, accuracy = precision_recall_accuracy(scores, labels)
    return _safe_auc(scores, labels), accuracy, precision, recall


def evaluate(
    model: DPIModel,
    records: Sequence[InteractionRecord],
    mc: Optional[MCDropoutConfig],
    train_proteins: set[str] = frozenset(),
    train_drugs: set[str] = frozenset(),
) -> MetricsReport:
    """Metrics on one prediction set: the MC mean when sampling, a dropout-off pass otherwise."""
    if not records:
        raise DataError("cannot evaluate an empty dataset")
    labels = np.array([r.label for r in records])
    if mc is not None:
        scores = np.array([p.p_interaction for p in mc_predictions(model, records, mc)])
    else:
        scores = deterministic_scores(model, records)

    auc, accuracy, precision, recall = _metrics(scores, labels)
    index = {id(r): i for i, r in enumerate(records)}
    subsets = []
    for name, members in split_by_entities(records, set(train_proteins), set(train_drugs)).items():
        if not members:
            subsets.append(SubsetMetrics(subset=name, count=0))
            continue
        rows = [index[id(r)] for r in members]
        s_auc, s_acc, s_prec, s_rec = _metrics(scores[rows], labels[rows])
        subsets.append(
            SubsetMetrics(subset=name, count=len(rows), roc_auc=s_auc, accuracy=s_acc, precision=s_prec, recall=s_rec)
        )

    return MetricsReport(
        count=len(records),
        roc_auc=auc,
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        mc_samples=mc.mc_samples if mc is not None else 0,
        subsets=subsets,
    )


def prediction_table(records: Sequence[InteractionRecord], predictions: Sequence[MCPrediction]) -> pd.DataFrame:
    rows = []
    for record, prediction in zip(records, predictions):
        rows.append(
            {
                "smiles": record.smiles,
                "protein": record.protein_id,
                "p_interaction": prediction.p_interaction,
                "epistemic": uncertainty(prediction, UncertaintyKind.EPISTEMIC),
                "aleatoric": uncertainty(prediction, UncertaintyKind.ALEATORIC),
                "total": uncertainty(prediction, UncertaintyKind.TOTAL),
            }
        )
    frame = pd.DataFrame(rows, columns=["smiles", "protein", "p_interaction", "epistemic", "aleatoric", "total"])
    for kind in UncertaintyKind:
        # rank 1 = most confident
        frame[f"rank_{kind.value}"] = frame[kind.value].rank(method="first").astype("int64")
    return frame


# ----------------------------------------------------------------------
# Noise robustness
# ----------------------------------------------------------------------
def perturb(records: Sequence[InteractionRecord], sigma: float, rng: np.random.Generator) -> list[InteractionRecord]:
    """Copies with i.i.d. N(0, sigma^2) noise on every protein feature; sigma 0 returns the records unchanged."""
    if sigma < 0:
        raise ConfigurationError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return list(records)
    noisy = []
    for record in records:
        features = record.protein.features
        embedding = ProteinEmbedding(id=record.protein.id, features=features + sigma * rng.standard_normal(features.shape))
        noisy.append(replace(record, protein=embedding))
    return noisy


def noise_target(records: Sequence[InteractionRecord]) -> str:
    """Which protein features ``perturb`` adds noise to, for reports."""
    if any(record.protein.residue_level for record in records):
        return "residue embeddings, every residue row, before the protein encoder"
    return "pooled protein embeddings, before the protein encoder"


def noise_sweep(
    model: DPIModel,
    test: Sequence[InteractionRecord],
    cfg: NoiseConfig,
    mc: MCDropoutConfig,
    baseline: Optional[DPIModel] = None,
) -> list[NoiseSweepRow]:
    """ROC-AUC per sigma with MC sampling and with a plain pass; one noise draw per sigma serves every model."""
    if any(sigma < 0 for sigma in cfg.sigmas):
        raise ConfigurationError("noise sigmas must be >= 0")
    labels = [r.label for r in test]
    rows = []
    for index, sigma in enumerate(cfg.sigmas):
        noisy = perturb(test, sigma, stream(cfg.seed, index))
        mc_scores = [p.p_interaction for p in mc_predictions(model, noisy, mc)]
        row = NoiseSweepRow(
            sigma=sigma,
            roc_auc_mc=_safe_auc(mc_scores, labels),
            roc_auc_plain=_safe_auc(deterministic_scores(model, noisy), labels),
            roc_auc_no_dropout=_safe_auc(deterministic_scores(baseline, noisy), labels) if baseline else None,
        )
        logger.info("Noise sigma=%.3f: mc=%s plain=%s", sigma, row.roc_auc_mc, row.roc_auc_plain)
        rows.append(row)
    return rows


# ----------------------------------------------------------------------
# Training-size trend
# ----------------------------------------------------------------------
def mean_traces(predictions: Sequence[MCPrediction]) -> tuple[float, float]:
    epistemic = float(np.mean([uncertainty(p, UncertaintyKind.EPISTEMIC) for p in predictions]))
    aleatoric = float(np.mean([uncertainty(p, UncertaintyKind.ALEATORIC) for p in predictions]))
    return epistemic, aleatoric


def size_sweep(split: DatasetSplit, config: RunConfig, fractions: Sequence[float] = SIZE_FRACTIONS) -> list[SizeSweepRow]:
    """Train on nested prefixes of the (already shuffled) training set; mean traces on the fixed test set."""
    if not split.test:
        raise DataError("size sweep needs a non-empty test set")
    smallest = math.floor(min(fractions) * len(split.train))
    if smallest < MIN_BATCHES_AT_SMALLEST * config.train.batch_size:
        raise DataError(
            f"training set too small: fraction {min(fractions)} leaves {smallest} records, "
            f"need {MIN_BATCHES_AT_SMALLEST} batches of {config.train.batch_size}"
        )

    rows = []
    for fraction in fractions:
        size = math.floor(fraction * len(split.train))
        subset = DatasetSplit(train=split.train[:size], valid=split.valid, test=split.test, split_mode=split.split_mode, seed=split.seed)
        result = train(subset, config)
        epistemic, aleatoric = mean_traces(mc_predictions(result.model, split.test, config.mc))
        logger.info("Size fraction %.3f (%d records): epistemic=%.5f aleatoric=%.5f", fraction, size, epistemic, aleatoric)
        rows.append(SizeSweepRow(fraction=fraction, train_size=size, epistemic=epistemic, aleatoric=aleatoric))
    return rows


# ----------------------------------------------------------------------
# Confidence curves and screening
# ----------------------------------------------------------------------
def confidence_order(predictions: Sequence[MCPrediction], kind: UncertaintyKind | str) -> list[int]:
    """Indices from most to least confident; ties keep input order."""
    scores = [confidence_score(p, kind) for p in predictions]
    return sorted(range(len(scores)), key=lambda i: -scores[i])


def curve_from_predictions(
    predictions: Sequence[MCPrediction],
    labels: Sequence[int],
    kind: UncertaintyKind | str,
) -> list[CurvePoint]:
    if not predictions:
        raise DataError("confidence curve of an empty test set")
    kind = UncertaintyKind(kind)
    order = confidence_order(predictions, kind)
    probs = np.array([predictions[i].p_interaction for i in order])
    ordered_labels = np.array([labels[i] for i in order])
    n = len(order)
    points = []
    for percentile in PERCENTILES:
        k = max(1, math.ceil(percentile * n / 100))
        _, _, accuracy = precision_recall_accuracy(probs[:k], ordered_labels[:k])
        points.append(CurvePoint(kind=kind, percentile=percentile, accuracy=accuracy))
    return points


def confidence_curve(
    model: DPIModel,
    test: Sequence[InteractionRecord],
    kind: UncertaintyKind | str,
    mc: MCDropoutConfig,
) -> list[CurvePoint]:
    """Accuracy over the top 10%, 20%, ... 100% most confident test pairs."""
    if not test:
        raise DataError("confidence curve of an empty test set")
    return curve_from_predictions(mc_predictions(model, test, mc), [r.label for r in test], kind)


def screen_low_confidence(
    records: Sequence[InteractionRecord],
    predictions: Sequence[MCPrediction],
    kind: UncertaintyKind | str,
    keep_fraction: float,
) -> tuple[list[InteractionRecord], list[InteractionRecord]]:
    """Keep the ``keep_fraction`` most confident records; the rest is flagged. Input order is preserved in both."""
    if not 0.0 <= keep_fraction <= 1.0:
        raise DataError(f"keep_fraction must lie in [0, 1], got {keep_fraction}")
    if len(records) != len(predictions):
        raise DataError(f"{len(records)} records but {len(predictions)} predictions")
    keep = set(confidence_order(predictions, kind)[: math.ceil(keep_fraction * len(records))])
    kept = [r for i, r in enumerate(records) if i in keep]
    flagged = [r for i, r in enumerate(records) if i not in keep]
    return kept, flagged
