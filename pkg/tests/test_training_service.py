import numpy as np
import pytest

from core.errors import ConfigurationError, TrainingDivergedError
from models.interaction_model import DatasetSplit
from models.settings_model import ModelConfig, RunConfig
from services.model_service import DPIModel
from services.training_service import deterministic_scores, model_config_for, train, validation_auc


def config_with(base: RunConfig, **train_values) -> RunConfig:
    return base.model_copy(update={"train": base.train.model_copy(update=train_values)})


@pytest.fixture
def fixed_split(toy_records):
    return DatasetSplit(train=toy_records[:40], valid=toy_records[40:60], test=toy_records[60:])


class TestTrain:
    def test_history_and_restored_best(self, toy_split, tiny_run_config):
        result = train(toy_split, tiny_run_config)
        assert 1 <= len(result.history) <= 3
        assert [h.epoch for h in result.history] == list(range(1, len(result.history) + 1))
        assert all(np.isfinite(h.train_loss) for h in result.history)
        assert 1 <= result.best_epoch <= len(result.history)
        assert validation_auc(result.model, toy_split.valid) == result.best_valid_roc_auc

    def test_same_seed_same_parameters(self, toy_split, tiny_run_config):
        first = train(toy_split, tiny_run_config).model.state_dict()
        second = train(toy_split, tiny_run_config).model.state_dict()
        for name, value in first.items():
            np.testing.assert_array_equal(value, second[name])

    def test_zero_learning_rate_keeps_initial_parameters(self, toy_split, tiny_run_config):
        config = config_with(tiny_run_config, lr=0.0, epochs=1)
        result = train(toy_split, config)
        initial = DPIModel.build(result.model.config, seed=config.train.seed).state_dict()
        for name, value in result.model.state_dict().items():
            np.testing.assert_array_equal(value, initial[name])

    def test_early_stop(self, fixed_split, tiny_run_config):
        result = train(fixed_split, config_with(tiny_run_config, lr=0.0, epochs=5, patience=1))
        assert result.stopped_early
        assert len(result.history) == 2
        assert result.best_epoch == 1

    def test_loss_decreases_on_separable_data(self, fixed_split, tiny_run_config):
        result = train(fixed_split, config_with(tiny_run_config, epochs=8, lr=0.005, patience=20))
        losses = [h.train_loss for h in result.history]
        assert losses[-1] < losses[0]

    def test_divergence_reports_batch(self, toy_split, tiny_run_config, tiny_model_config):
        model = DPIModel.build(tiny_model_config)
        first = next(iter(model.tape.parameters.values()))
        first.data[...] = np.nan
        with pytest.raises(TrainingDivergedError) as info:
            train(toy_split, tiny_run_config, model=model)
        assert info.value.epoch == 1
        assert len(info.value.batch_ids) == tiny_run_config.train.batch_size
        assert model.tape.nodes == []


class TestHelpers:
    def test_validation_auc_without_records(self, tiny_model):
        assert validation_auc(tiny_model, []) is None

    def test_validation_auc_single_class(self, tiny_model, toy_records):
        negatives = [r for r in toy_records if r.label == 0][:5]
        assert validation_auc(tiny_model, negatives) is None

    def test_deterministic_scores(self, tiny_model, toy_records):
        scores = deterministic_scores(tiny_model, toy_records[:7], batch_size=3)
        assert scores.shape == (7,)
        np.testing.assert_allclose(scores, deterministic_scores(tiny_model, toy_records[:7]))

    def test_model_config_follows_embedding_width(self, toy_records):
        config = model_config_for(ModelConfig(protein_dim=64), toy_records)
        assert config.protein_dim == 8

    def test_epoch_cap(self):
        with pytest.raises(ConfigurationError):
            RunConfig.from_flat({"epochs": 201})
