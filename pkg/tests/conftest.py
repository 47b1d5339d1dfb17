from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd
import pytest

from core.autodiff import Tape, Tensor
from models.interaction_model import DatasetSplit, InteractionRecord
from models.settings_model import MCDropoutConfig, ModelConfig, RunConfig, StubEmbedderConfig
from services.dataset_service import GraphCache, ProteinResolver, split
from services.model_service import DPIModel
from services.synthetic_service import SyntheticSpec, generate

DATA_DIR = Path(__file__).parent / "data"


# =============================================================================
# Gradient checking
# =============================================================================

def numerical_gradients(build_loss: Callable[[], Tensor], tape: Tape, eps: float = 1e-6) -> dict[str, np.ndarray]:
    """Central differences for every parameter on ``tape``."""
    numeric = {}
    with tape.no_grad():
        for name, param in tape.parameters.items():
            grad = np.zeros_like(param.data)
            for index in np.ndindex(param.data.shape):
                original = param.data[index]
                param.data[index] = original + eps
                plus = build_loss().item()
                param.data[index] = original - eps
                minus = build_loss().item()
                param.data[index] = original
                grad[index] = (plus - minus) / (2.0 * eps)
            numeric[name] = grad
    return numeric


@pytest.fixture
def gradcheck():
    """Compare tape gradients against central differences; ``build_loss`` must be deterministic."""

    def check(build_loss: Callable[[], Tensor], tape: Tape, rtol: float = 1e-4, atol: float = 1e-6) -> None:
        tape.zero_grad()
        tape.backward(build_loss())
        analytic = {name: param.grad.copy() for name, param in tape.parameters.items()}
        tape.zero_grad()
        numeric = numerical_gradients(build_loss, tape)
        for name in tape.parameters:
            np.testing.assert_allclose(analytic[name], numeric[name], rtol=rtol, atol=atol, err_msg=name)

    return check


# =============================================================================
# Data fixtures
# =============================================================================

@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def smiles_corpus() -> pd.DataFrame:
    return pd.read_csv(DATA_DIR / "smiles_corpus.tsv", sep="\t", dtype={"smiles": str, "ring_sizes": str}, keep_default_na=False)


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    return ModelConfig(
        hidden_dim=8,
        graph_layers=2,
        classifier_hidden=16,
        classifier_layers=3,
        protein_dim=8,
        protein_channels=4,
        protein_kernel=3,
        dropout_rate=0.1,
    )


@pytest.fixture
def tiny_run_config() -> RunConfig:
    return RunConfig.from_flat(
        {
            "hidden_dim": 8,
            "graph_layers": 2,
            "classifier_hidden": 16,
            "protein_channels": 4,
            "dropout_rate": 0.1,
            "epochs": 3,
            "batch_size": 4,
            "lr": 0.001,
            "mc_samples": 8,
            "stub_dim": 8,
        }
    )


@pytest.fixture
def mc_config() -> MCDropoutConfig:
    return MCDropoutConfig(mc_samples=16, dropout_rate=0.1, rng_seed=7)


def attach_inputs(records: list[InteractionRecord], stub_dim: int = 8) -> list[InteractionRecord]:
    """Featurise drugs and stub-embed proteins the way ingestion does."""
    resolver = ProteinResolver(stub=StubEmbedderConfig(stub_dim=stub_dim))
    graphs = GraphCache()
    return [replace(r, graph=graphs.get(r.smiles), protein=resolver.resolve(r.protein_id)) for r in records]


@pytest.fixture(scope="session")
def toy_records() -> list[InteractionRecord]:
    spec = SyntheticSpec(pairs=80, seed=3, drugs_per_class=6, proteins_per_class=3, protein_length=30)
    return attach_inputs(generate(spec))


@pytest.fixture
def toy_split(toy_records) -> DatasetSplit:
    return split(toy_records, seed=0)


@pytest.fixture
def tiny_model(tiny_model_config) -> DPIModel:
    return DPIModel.build(tiny_model_config, seed=0)
