import numpy as np
import pytest

from core.nn import DropoutContext, DropoutMode, cross_entropy_l2
from core.seeding import stream
from models.protein_model import ProteinEmbedding
from models.settings_model import ModelConfig
from services.featurizer_service import featurize
from services.model_service import DPIModel
from services.smiles_service import parse_smiles

DRUGS = ["CC(=O)O", "c1ccncc1", "C1CC1N"]
LABELS = np.array([1, 0, 1])


def small_model(conv_axis: str) -> DPIModel:
    config = ModelConfig(
        hidden_dim=3,
        graph_layers=2,
        classifier_hidden=4,
        classifier_layers=2,
        protein_dim=5,
        protein_channels=2,
        protein_kernel=3,
        conv_axis=conv_axis,
        dropout_rate=0.2,
    )
    return DPIModel.build(config, seed=3)


def proteins(rng, residue_level: bool) -> list[ProteinEmbedding]:
    shapes = [(4, 5), (6, 5), (3, 5)] if residue_level else [(5,)] * 3
    return [ProteinEmbedding(id=f"P{k}", features=rng.standard_normal(shape)) for k, shape in enumerate(shapes)]


class TestEndToEndGradients:
    """Every parameter tensor, from the drug and protein encoders through the head and the penalised loss."""

    @pytest.mark.parametrize("conv_axis", ["feature", "residue"])
    def test_without_dropout(self, gradcheck, rng, conv_axis):
        model = small_model(conv_axis)
        graphs = [featurize(parse_smiles(s)) for s in DRUGS]
        targets = proteins(rng, residue_level=conv_axis == "residue")
        off = DropoutContext(DropoutMode.OFF)

        def loss():
            return cross_entropy_l2(model.forward(graphs, targets, off), LABELS, model.tape, 0.01)

        assert {name.split(".")[0] for name in model.tape.parameters} >= {"graphnet", "protein", "classifier"}
        gradcheck(loss, model.tape)

    def test_with_fixed_training_masks(self, gradcheck, rng):
        model = small_model("feature")
        graphs = [featurize(parse_smiles(s)) for s in DRUGS]
        targets = proteins(rng, residue_level=False)

        def loss():
            dropout = DropoutContext(DropoutMode.TRAIN, 0.2, stream(9, 2, 0))
            return cross_entropy_l2(model.forward(graphs, targets, dropout), LABELS, model.tape, 0.01)

        gradcheck(loss, model.tape)


class TestForward:
    def test_rows_are_distributions(self, rng):
        model = small_model("feature")
        probs = model.predict([featurize(parse_smiles(s)) for s in DRUGS], proteins(rng, residue_level=False))
        assert probs.shape == (3, 2)
        np.testing.assert_allclose(probs.sum(axis=1), np.ones(3))
