from __future__ import annotations

import logging
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from core.errors import MetricError
from models.interaction_model import InteractionRecord

logger = logging.getLogger(__name__)

THRESHOLD = 0.5

SUBSETS = ("seen-p/seen-d", "seen-p/unseen-d", "unseen-p/seen-d", "unseen-p/unseen-d")


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Mann-Whitney ROC-AUC from average ranks; tied scores count one half."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.size != labels.size:
        raise MetricError(f"{scores.size} scores but {labels.size} labels")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC-AUC needs both classes present")

    # doubled average ranks are integers, so the statistic is exact
    doubled = np.rint(rankdata(scores, method="average") * 2).astype(np.int64)
    u_doubled = int(doubled[positive].sum()) - n_pos * (n_pos + 1)
    return float(Fraction(u_doubled, 2 * n_pos * n_neg))


def precision_recall_accuracy(
    probs: Sequence[float],
    labels: Sequence[int],
    threshold: float = THRESHOLD,
) -> tuple[Optional[float], Optional[float], float]:
    """Class-1 precision and recall plus accuracy; a score ``>= threshold`` predicts 1.

    Precision is ``None`` (reported as "n/a") without positive predictions,
    recall is ``None`` without positive labels.
    """
    probs = np.asarray(probs, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if probs.size != labels.size:
        raise MetricError(f"{probs.size} predictions but {labels.size} labels")
    if probs.size == 0:
        raise MetricError("no predictions to score")

    predicted = probs >= threshold
    actual = labels == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))

    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    accuracy = float(np.mean(predicted == actual))
    return precision, recall, accuracy


def subset_breakdown(test: Sequence[InteractionRecord], train: Sequence[InteractionRecord]) -> dict[str, list[InteractionRecord]]:
    """Assign each test pair to one of the four seen/unseen protein x drug subsets."""
    proteins, drugs = training_entities(train)
    return split_by_entities(test, proteins, drugs)


def split_by_entities(
    test: Sequence[InteractionRecord],
    train_proteins: set[str],
    train_drugs: set[str],
) -> dict[str, list[InteractionRecord]]:
    subsets: dict[str, list[InteractionRecord]] = {name: [] for name in SUBSETS}
    for record in test:
        protein = "seen-p" if record.protein_id in train_proteins else "unseen-p"
        drug = "seen-d" if record.smiles in train_drugs else "unseen-d"
        subsets[f"{protein}/{drug}"].append(record)
    return subsets


def training_entities(train: Sequence[InteractionRecord]) -> tuple[set[str], set[str]]:
    return {r.protein_id for r in train}, {r.smiles for r in train}
