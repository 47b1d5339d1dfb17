from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import dotenv_values

from core.errors import UsageError
from models.settings_model import RunConfig


def read_config_file(path: str | Path) -> dict[str, Optional[str]]:
    """Flat ``key = value`` pairs; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    return dict(dotenv_values(path))


def load_run_config(
    path: Optional[str | Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    defaults: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """``defaults`` (e.g. from a checkpoint), then file values, then command-line overrides (``None`` means not given)."""
    values: dict[str, Any] = {key: value for key, value in (defaults or {}).items() if value is not None}
    if path:
        values.update({key: value for key, value in read_config_file(path).items() if value is not None})
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig.from_flat(values)
