"""Versioned binary checkpoints.

Layout (little-endian)::

    magic   8 bytes  b"DPICKPT\\x00"
    version u32
    echo    u32 length + UTF-8 JSON (config echo, training entities)
    count   u32
    tensor  u16 name length + UTF-8 name, u32 ndim, ndim x u64 dims, f8 values
"""
from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from core.errors import CheckpointError, UsageError

logger = logging.getLogger(__name__)

MAGIC = b"DPICKPT\x00"
VERSION = 1


def save_checkpoint(path: str | Path, state: Mapping[str, np.ndarray], echo: Mapping[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    echo_bytes = json.dumps(echo, sort_keys=True).encode("utf-8")

    chunks = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(echo_bytes)), echo_bytes]
    chunks.append(struct.pack("<I", len(state)))
    for name in sorted(state):
        values = np.ascontiguousarray(state[name], dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        chunks.append(struct.pack("<I", values.ndim) + struct.pack(f"<{values.ndim}Q", *values.shape))
        chunks.append(values.tobytes())
    path.write_bytes(b"".join(chunks))
    logger.info("Saved checkpoint with %d tensors to %s", len(state), path)
    return path


class _Reader:
    def __init__(self, data: bytes, path: Path) -> None:
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.pos + size > len(self.data):
            raise CheckpointError(f"{self.path}: truncated checkpoint (need {size} bytes at offset {self.pos})")
        chunk = self.data[self.pos : self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"checkpoint not found: {path}")
    reader = _Reader(path.read_bytes(), path)

    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    (version,) = reader.unpack("<I")
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")

    (echo_length,) = reader.unpack("<I")
    try:
        echo = json.loads(reader.take(echo_length).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt config echo") from exc

    (count,) = reader.unpack("<I")
    state: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        name = reader.take(name_length).decode("utf-8", errors="replace")
        (ndim,) = reader.unpack("<I")
        shape = reader.unpack(f"<{ndim}Q") if ndim else ()
        size = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(reader.take(8 * size), dtype="<f8").astype(np.float64)
        state[name] = values.reshape(shape)

    if reader.pos != len(reader.data):
        raise CheckpointError(f"{path}: {len(reader.data) - reader.pos} trailing bytes")
    return state, echo
