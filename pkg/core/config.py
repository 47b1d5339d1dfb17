from __future__ import annotations

import os
from functools import lru_cache
from typing import Optional

from dotenv import load_dotenv

# laad .env automatisch als aanwezig
load_dotenv()


class Settings:
    # Output
    output_dir: str = "runs"
    log_level: str = "INFO"

    # Defaults for the CLI and the inspector
    embeddings_path: Optional[str] = None
    checkpoint_path: Optional[str] = None


def _optional_env(key: str) -> Optional[str]:
    value = os.getenv(key)
    if value is None or not value.strip():
        return None
    return value.strip()


@lru_cache
def get_settings() -> Settings:
    s = Settings()

    s.output_dir = os.getenv("DPI_OUTPUT_DIR", s.output_dir)
    s.log_level = os.getenv("DPI_LOG_LEVEL", s.log_level).upper()

    s.embeddings_path = _optional_env("DPI_EMBEDDINGS")
    s.checkpoint_path = _optional_env("DPI_CHECKPOINT")

    return s
