from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Sequence

import pandas as pd
from pydantic import BaseModel

logger = logging.getLogger(__name__)


def to_frame(rows: Sequence[BaseModel], columns: Sequence[str] | None = None) -> pd.DataFrame:
    frame = pd.DataFrame([row.model_dump(mode="json") for row in rows])
    if columns is not None:
        frame = frame.reindex(columns=list(columns))
    return frame


def write_csv(path: str | Path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", na_rep="n/a")
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path


def dumps(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=2)


def write_json(path: str | Path, payload: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload) + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
