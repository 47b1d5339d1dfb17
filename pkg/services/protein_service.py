"""Protein side: mean pooling, the three-layer 1-D CNN and the hashed 3-mer stub embedder."""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from core.autodiff import Tape, Tensor, add, concat, conv1d, matmul, relu, reshape
from core.errors import ConfigurationError, DataError
from core.nn import DropoutContext, kaiming_uniform
from models.protein_model import ProteinEmbedding
from models.settings_model import StubEmbedderConfig

logger = logging.getLogger(__name__)

CANONICAL_RESIDUES = frozenset("ACDEFGHIKLMNPQRSTVWY")
KMER = 3


@dataclass
class ConvLayer:
    kernel: Tensor  # (out, in, k)
    bias: Tensor  # (out, 1)


@dataclass
class ProteinEncoderStack:
    """Three conv-ReLU-dropout layers.

    ``feature`` axis: the pooled vector is a 1-channel signal of length d,
    channels 1 -> c -> c -> 1. ``residue`` axis: the (L, d) matrix is a
    d-channel signal of length L, channels d -> c -> c -> d, mean-pooled after.
    """

    dim: int
    axis: Literal["feature", "residue"] = "feature"
    layers: list[ConvLayer] = field(default_factory=list)


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------
def build_protein_encoder(
    tape: Tape,
    rng: np.random.Generator,
    dim: int,
    channels: int = 8,
    kernel_size: int = 3,
    axis: Literal["feature", "residue"] = "feature",
    num_layers: int = 3,
    prefix: str = "protein",
) -> ProteinEncoderStack:
    if kernel_size % 2 == 0:
        raise ConfigurationError(f"protein conv kernel size must be odd, got {kernel_size}")
    outer = 1 if axis == "feature" else dim
    widths = [outer] + [channels] * (num_layers - 1) + [outer]
    layers = []
    for index, (c_in, c_out) in enumerate(zip(widths[:-1], widths[1:])):
        fan_in = c_in * kernel_size
        layers.append(
            ConvLayer(
                kernel=tape.parameter(
                    f"{prefix}.{index}.kernel", kaiming_uniform(rng, fan_in, (c_out, c_in, kernel_size))
                ),
                bias=tape.parameter(f"{prefix}.{index}.bias", np.zeros((c_out, 1)), weight=False),
            )
        )
    return ProteinEncoderStack(dim=dim, axis=axis, layers=layers)


# ----------------------------------------------------------------------
# Pooling and encoding
# ----------------------------------------------------------------------
def pool(embedding: ProteinEmbedding) -> np.ndarray:
    """Column mean of the residue matrix (a pooled vector is returned as is)."""
    matrix = embedding.as_matrix()
    if matrix.shape[0] == 0:
        raise DataError(f"protein {embedding.id!r} has no residues (L = 0)")
    return matrix.mean(axis=0)


def _conv_stack(stack: ProteinEncoderStack, signal: Tensor, dropout: DropoutContext) -> Tensor:
    for layer in stack.layers:
        signal = dropout(relu(add(conv1d(signal, layer.kernel), layer.bias)))
    return signal


def encode_protein(stack: ProteinEncoderStack, x_p0, dropout: DropoutContext) -> Tensor:
    """Feature-axis encoder on pooled vectors ``(d,)`` or a batch ``(B, d)``; output has the same shape."""
    x = x_p0 if isinstance(x_p0, Tensor) else Tensor(x_p0)
    if x.shape[-1] != stack.dim:
        raise ConfigurationError(f"protein encoder expects dimension {stack.dim}, got input of shape {x.shape}")
    if stack.axis != "feature":
        raise ConfigurationError("encode_protein works on pooled vectors; use encode_residues for the residue axis")
    batched = len(x.shape) == 2
    signal = reshape(x, (x.shape[0], 1, stack.dim) if batched else (1, stack.dim))
    out = _conv_stack(stack, signal, dropout)
    return reshape(out, x.shape)


def encode_residues(stack: ProteinEncoderStack, matrices: Sequence[np.ndarray], dropout: DropoutContext) -> Tensor:
    """Residue-axis encoder: convolve each ``(L, d)`` matrix along L, then mean-pool; returns ``(B, d)``."""
    rows = []
    for matrix in matrices:
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim == 1:
            matrix = matrix.reshape(1, -1)
        length, dim = matrix.shape
        if length == 0:
            raise DataError("protein residue matrix is empty (L = 0)")
        if dim != stack.dim:
            raise ConfigurationError(f"protein encoder expects dimension {stack.dim}, got {dim}")
        out = _conv_stack(stack, Tensor(matrix.T), dropout)
        rows.append(reshape(matmul(out, np.full((length, 1), 1.0 / length)), (1, dim)))
    if not rows:
        raise DataError("no proteins to encode")
    return concat(rows, axis=0)


def encode_proteins(stack: ProteinEncoderStack, embeddings: Sequence[ProteinEmbedding], dropout: DropoutContext) -> Tensor:
    if stack.axis == "residue":
        return encode_residues(stack, [e.as_matrix() for e in embeddings], dropout)
    pooled = np.stack([pool(e) for e in embeddings])
    return encode_protein(stack, pooled, dropout)


# ----------------------------------------------------------------------
# Stub embedder
# ----------------------------------------------------------------------
def _bucket(kmer: str, dim: int, seed: int) -> int:
    digest = hashlib.blake2b(kmer.encode("ascii"), digest_size=8, key=str(seed).encode("ascii")).digest()
    return int.from_bytes(digest, "little") % dim


def stub_embed(sequence: str, cfg: StubEmbedderConfig = StubEmbedderConfig()) -> ProteinEmbedding:
    """Unit-norm vector of hashed 3-mer counts; residues outside the 20 canonical letters count as ``X``."""
    cleaned = "".join(ch if ch in CANONICAL_RESIDUES else "X" for ch in sequence.strip().upper())
    if not cleaned:
        raise DataError("cannot embed an empty protein sequence")

    kmers = [cleaned] if len(cleaned) < KMER else [cleaned[i : i + KMER] for i in range(len(cleaned) - KMER + 1)]
    counts = [0] * cfg.stub_dim
    for kmer in kmers:
        counts[_bucket(kmer, cfg.stub_dim, cfg.stub_seed)] += 1

    vector = np.array(counts, dtype=np.float64)
    return ProteinEmbedding(id=sequence, features=vector / np.linalg.norm(vector))
