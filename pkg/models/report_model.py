from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, field_serializer

from models.prediction_model import UncertaintyKind


# ----------------------------------------------------------------------
# Rapportage schema's (CSV / JSON)
# ----------------------------------------------------------------------
class EpochRecord(BaseModel):
    epoch: int
    train_loss: float
    valid_roc_auc: Optional[float]
    best_epoch: int


class SubsetMetrics(BaseModel):
    subset: str  # e.g. "seen-p/unseen-d"
    count: int
    roc_auc: Optional[float] = None
    accuracy: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None

    @field_serializer("precision")
    def _precision_na(self, value: Optional[float]):
        return "n/a" if value is None else value


class MetricsReport(BaseModel):
    count: int
    roc_auc: Optional[float]
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    mc_samples: int
    subsets: list[SubsetMetrics] = []

    @field_serializer("precision")
    def _precision_na(self, value: Optional[float]):
        return "n/a" if value is None else value


class CurvePoint(BaseModel):
    kind: UncertaintyKind
    percentile: int
    accuracy: float


class SizeSweepRow(BaseModel):
    fraction: float
    train_size: int
    epistemic: float
    aleatoric: float


class NoiseSweepRow(BaseModel):
    sigma: float
    roc_auc_mc: Optional[float]
    roc_auc_plain: Optional[float]
    roc_auc_no_dropout: Optional[float] = None
