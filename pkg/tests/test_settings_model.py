import pytest

from core.errors import ConfigurationError, UsageError
from models.settings_model import FLAT_KEYS, ModelConfig, NoiseConfig, RunConfig


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert config.model.hidden_dim == 256
        assert config.model.classifier_hidden == 512
        assert config.train.epochs == 200
        assert config.train.lr == 0.001
        assert config.mc.mc_samples == 30

    def test_dropout_rate_feeds_both_sections(self):
        config = RunConfig.from_flat({"dropout_rate": "0.3"})
        assert config.model.dropout_rate == 0.3
        assert config.mc.dropout_rate == 0.3

    def test_flat_round_trip(self):
        config = RunConfig.from_flat({"epochs": 5, "noise_seed": 4, "conv_axis": "residue", "sigmas": "0,0.25"})
        flat = config.flat()
        assert set(flat) == set(FLAT_KEYS) | {"dropout_rate"}
        assert RunConfig.from_flat(flat) == config

    def test_unknown_key(self):
        with pytest.raises(UsageError):
            RunConfig.from_flat({"momentum": 0.9})

    @pytest.mark.parametrize(
        "values",
        [{"dropout_rate": 1.0}, {"protein_kernel": 2}, {"mc_samples": 0}, {"sigmas": "0,-0.1"}, {"epochs": 0}],
    )
    def test_invalid_values(self, values):
        with pytest.raises(ConfigurationError):
            RunConfig.from_flat(values)

    def test_sections_are_frozen(self):
        with pytest.raises(Exception):
            ModelConfig().hidden_dim = 3

    def test_sigmas_from_string(self):
        assert NoiseConfig(sigmas="0, 0.1,0.2").sigmas == (0.0, 0.1, 0.2)
