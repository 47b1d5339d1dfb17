"""The full interaction model: protein encoder + GraphNet drug encoder + classifier head."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from core.autodiff import Tape, Tensor
from core.errors import CheckpointError, ConfigurationError
from core.nn import DropoutContext, DropoutMode
from core.seeding import stream
from infrastructure.io.checkpoint_store import load_checkpoint, save_checkpoint
from models.graph_model import GraphBatch, MolGraph
from models.protein_model import ProteinEmbedding
from models.settings_model import ModelConfig
from services.classifier_service import ClassifierHead, build_classifier, concat_features, predict_logits
from services.graphnet_service import GraphNetStack, build_graphnet, encode_drugs
from services.protein_service import ProteinEncoderStack, build_protein_encoder, encode_proteins

logger = logging.getLogger(__name__)

# RNG sub-streams per purpose
INIT_STREAM = 0
SHUFFLE_STREAM = 1
DROPOUT_STREAM = 2


@dataclass
class DPIModel:
    config: ModelConfig
    tape: Tape
    graphnet: GraphNetStack
    protein: ProteinEncoderStack
    head: ClassifierHead

    @classmethod
    def build(cls, config: ModelConfig, seed: int = 0) -> "DPIModel":
        tape = Tape()
        rng = stream(seed, INIT_STREAM)
        protein = build_protein_encoder(
            tape,
            rng,
            dim=config.protein_dim,
            channels=config.protein_channels,
            kernel_size=config.protein_kernel,
            axis=config.conv_axis,
        )
        graphnet = build_graphnet(tape, rng, hidden_dim=config.hidden_dim, num_layers=config.graph_layers)
        head = build_classifier(
            tape,
            rng,
            input_dim=config.protein_dim + graphnet.output_dim,
            hidden_dim=config.classifier_hidden,
            num_layers=config.classifier_layers,
        )
        logger.debug("Built model with %d parameter tensors", len(tape.parameters))
        return cls(config=config, tape=tape, graphnet=graphnet, protein=protein, head=head)

    # ------------------------------------------------------------------
    # Forward passes
    # ------------------------------------------------------------------
    def forward(
        self,
        graphs: Sequence[MolGraph],
        proteins: Sequence[ProteinEmbedding],
        dropout: DropoutContext,
    ) -> Tensor:
        """Class probabilities ``(B, 2)`` for aligned drug graphs and protein embeddings."""
        if len(graphs) != len(proteins):
            raise ConfigurationError(f"{len(graphs)} drugs but {len(proteins)} proteins")
        x_d = encode_drugs(self.graphnet, GraphBatch.from_graphs(graphs), dropout)
        x_p = encode_proteins(self.protein, proteins, dropout)
        return predict_logits(self.head, concat_features(x_p, x_d), dropout)

    def predict(
        self,
        graphs: Sequence[MolGraph],
        proteins: Sequence[ProteinEmbedding],
        dropout: DropoutContext | None = None,
    ) -> np.ndarray:
        """Inference without recording; deterministic unless ``dropout`` samples masks."""
        with self.tape.no_grad():
            return self.forward(graphs, proteins, dropout or DropoutContext(DropoutMode.OFF)).numpy()

    # ------------------------------------------------------------------
    # State
    # ------------------------------------------------------------------
    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self.tape.parameters.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        expected = set(self.tape.parameters)
        if set(state) != expected:
            missing = sorted(expected - set(state))
            extra = sorted(set(state) - expected)
            raise CheckpointError(f"checkpoint tensors do not match the model (missing {missing}, unexpected {extra})")
        for name, param in self.tape.parameters.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != param.shape:
                raise CheckpointError(f"tensor {name!r} has shape {value.shape}, model expects {param.shape}")
            param.data = value.copy()
        self.tape.zero_grad()


# ----------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------
def save_model(path, model: DPIModel, echo: dict[str, Any]) -> None:
    save_checkpoint(path, model.state_dict(), {**echo, "model": model.config.model_dump(mode="json")})


def load_model(path) -> tuple[DPIModel, dict[str, Any]]:
    """Rebuild the model from the config echo and load its tensors."""
    state, echo = load_checkpoint(path)
    try:
        config = ModelConfig(**echo["model"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: config echo has no usable model section") from exc
    model = DPIModel.build(config)
    model.load_state_dict(state)
    logger.info("Loaded checkpoint %s", path)
    return model, echo
