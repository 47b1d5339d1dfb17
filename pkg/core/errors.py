from __future__ import annotations

from typing import Sequence


class ConfigurationError(ValueError):
    """Invalid configuration value (dropout rate, kernel size, sample count, ...)."""


class UsageError(ValueError):
    """Bad command-line usage: unknown flag, missing file, unknown subcommand."""


class ShapeError(ValueError):
    """Tensor dimensions that do not line up."""


class DataError(ValueError):
    """Input data that violates a domain invariant."""


class ParseError(DataError):
    def __init__(self, offset: int, reason: str):
        self.offset = offset
        self.reason = reason
        super().__init__(f"SMILES parse error at byte {offset}: {reason}")


class FeaturizationError(DataError):
    pass


class IngestionError(DataError):
    def __init__(self, message: str, rows: Sequence[tuple[int, str]] = ()):
        self.rows = list(rows)
        if self.rows:
            details = "; ".join(f"line {line}: {reason}" for line, reason in self.rows[:10])
            message = f"{message} ({details})"
        super().__init__(message)


class MetricError(DataError):
    pass


class TrainingStateError(RuntimeError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, batch_ids: Sequence[int], lr: float):
        self.epoch = epoch
        self.batch_ids = list(batch_ids)
        self.lr = lr
        super().__init__(
            f"Loss became non-finite in epoch {epoch} (batch records {self.batch_ids[:8]}"
            f"{'...' if len(self.batch_ids) > 8 else ''}); "
            f"learning rate {lr:g} may be too high for this data"
        )


class CheckpointError(RuntimeError):
    pass
