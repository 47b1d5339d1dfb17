"""Minibatch Adam training with best-validation checkpoint selection and early stopping."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from core.errors import MetricError, TrainingDivergedError
from core.nn import DropoutContext, DropoutMode, cross_entropy_l2
from core.optim import AdamState, adam_step
from core.seeding import stream
from models.interaction_model import DatasetSplit, InteractionRecord
from models.report_model import EpochRecord
from models.settings_model import ModelConfig, RunConfig
from services.metrics_service import roc_auc
from services.model_service import DROPOUT_STREAM, SHUFFLE_STREAM, DPIModel

logger = logging.getLogger(__name__)


@dataclass
class TrainingResult:
    model: DPIModel
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_valid_roc_auc: Optional[float] = None
    stopped_early: bool = False


def _inputs(records: Sequence[InteractionRecord]):
    return [r.graph for r in records], [r.protein for r in records]


def deterministic_scores(model: DPIModel, records: Sequence[InteractionRecord], batch_size: int = 256) -> np.ndarray:
    """Class-1 probability from a dropout-off pass."""
    scores = []
    for start in range(0, len(records), batch_size):
        graphs, proteins = _inputs(records[start : start + batch_size])
        scores.append(model.predict(graphs, proteins)[:, 1])
    return np.concatenate(scores) if scores else np.zeros(0)


def validation_auc(model: DPIModel, records: Sequence[InteractionRecord]) -> Optional[float]:
    if not records:
        return None
    try:
        return roc_auc(deterministic_scores(model, records), [r.label for r in records])
    except MetricError:
        return None


def model_config_for(config: ModelConfig, records: Sequence[InteractionRecord]) -> ModelConfig:
    """Match ``protein_dim`` to the width of the ingested embeddings."""
    dims = {r.protein.dim for r in records if r.protein is not None}
    if len(dims) == 1:
        dim = dims.pop()
        if dim != config.protein_dim:
            return config.model_copy(update={"protein_dim": dim})
    return config


def train(split: DatasetSplit, config: RunConfig, model: Optional[DPIModel] = None) -> TrainingResult:
    """Minimise summed cross-entropy + L2 with Adam; keep the epoch with the best validation ROC-AUC."""
    cfg = config.train
    if model is None:
        model = DPIModel.build(model_config_for(config.model, split.train), seed=cfg.seed)
    optimizer = AdamState(lr=cfg.lr)
    result = TrainingResult(model=model)
    best_state = model.state_dict()
    best_score = -math.inf
    train = list(split.train)
    rate = model.config.dropout_rate

    for epoch in range(1, cfg.epochs + 1):
        order = stream(cfg.seed, SHUFFLE_STREAM, epoch).permutation(len(train))
        dropout = DropoutContext(DropoutMode.TRAIN, rate, stream(cfg.seed, DROPOUT_STREAM, epoch))
        total_loss = 0.0

        for start in range(0, len(train), cfg.batch_size):
            batch = [train[i] for i in order[start : start + cfg.batch_size]]
            graphs, proteins = _inputs(batch)
            labels = np.array([r.label for r in batch], dtype=np.float64)

            pred = model.forward(graphs, proteins, dropout)
            loss = cross_entropy_l2(pred, labels, model.tape, cfg.l2_lambda)
            value = loss.item()
            if not math.isfinite(value):
                model.tape.discard()
                ids = [r.line if r.line else int(i) for r, i in zip(batch, order[start : start + cfg.batch_size])]
                raise TrainingDivergedError(epoch, ids, cfg.lr)
            model.tape.backward(loss)
            adam_step(optimizer, model.tape)
            total_loss += value

        mean_loss = total_loss / max(len(train), 1)
        auc = validation_auc(model, split.valid)
        # until some epoch has a usable validation AUC the latest epoch is kept
        improved = auc > best_score if auc is not None else best_score == -math.inf
        if improved:
            best_score = auc if auc is not None else best_score
            best_state = model.state_dict()
            result.best_epoch = epoch
            result.best_valid_roc_auc = auc

        result.history.append(
            EpochRecord(epoch=epoch, train_loss=mean_loss, valid_roc_auc=auc, best_epoch=result.best_epoch)
        )
        logger.info(
            "Epoch %d: loss=%.6f valid_roc_auc=%s best_epoch=%d",
            epoch, mean_loss, "n/a" if auc is None else f"{auc:.4f}", result.best_epoch,
        )

        if epoch - result.best_epoch >= cfg.patience:
            logger.info("Early stop after epoch %d (no improvement for %d epochs)", epoch, cfg.patience)
            result.stopped_early = True
            break

    model.load_state_dict(best_state)
    logger.info("Restored parameters from epoch %d", result.best_epoch)
    return result
