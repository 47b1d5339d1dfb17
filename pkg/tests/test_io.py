import json
import struct

import numpy as np
import pandas as pd
import pytest

from core.errors import CheckpointError, ConfigurationError, IngestionError, UsageError
from infrastructure.io.checkpoint_store import MAGIC, load_checkpoint, save_checkpoint
from infrastructure.io.config_file import load_run_config, read_config_file
from infrastructure.io.embedding_store import load_embeddings, write_embeddings
from infrastructure.io.report_writer import dumps, to_frame, write_csv
from models.protein_model import ProteinEmbedding
from models.report_model import MetricsReport, NoiseSweepRow
from services.model_service import DPIModel, load_model, save_model


# =============================================================================
# Checkpoints
# =============================================================================

class TestCheckpoint:
    def test_tensors_and_echo_survive(self, tmp_path):
        state = {"b": np.arange(3.0), "a": np.array([[1.5, -2.0], [0.1, 1e-300]]), "s": np.array(4.0)}
        path = save_checkpoint(tmp_path / "ckpt.bin", state, {"seed": 3, "name": "x"})
        loaded, echo = load_checkpoint(path)
        assert echo == {"name": "x", "seed": 3}
        assert sorted(loaded) == ["a", "b", "s"]
        for name, value in state.items():
            np.testing.assert_array_equal(loaded[name], value)
            assert loaded[name].shape == value.shape

    def test_bytes_are_stable(self, tmp_path):
        state = {"w": np.ones((2, 2))}
        first = save_checkpoint(tmp_path / "1.bin", state, {"k": 1}).read_bytes()
        second = save_checkpoint(tmp_path / "2.bin", dict(state), {"k": 1}).read_bytes()
        assert first == second
        assert first.startswith(MAGIC)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 16)
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_bad_version(self, tmp_path):
        path = tmp_path / "v.bin"
        path.write_bytes(MAGIC + struct.pack("<I", 99))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_truncated(self, tmp_path):
        path = save_checkpoint(tmp_path / "t.bin", {"w": np.ones(10)}, {})
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_trailing_bytes(self, tmp_path):
        path = save_checkpoint(tmp_path / "t.bin", {"w": np.ones(2)}, {})
        path.write_bytes(path.read_bytes() + b"\x00")
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(path)

    def test_missing(self, tmp_path):
        with pytest.raises(UsageError):
            load_checkpoint(tmp_path / "none.bin")

    def test_model_round_trip(self, tmp_path, tiny_model, toy_records):
        path = tmp_path / "model.bin"
        save_model(path, tiny_model, {"train_drugs": ["CCO"]})
        restored, echo = load_model(path)
        assert echo["train_drugs"] == ["CCO"]
        assert restored.config == tiny_model.config
        graphs = [r.graph for r in toy_records[:4]]
        proteins = [r.protein for r in toy_records[:4]]
        np.testing.assert_array_equal(restored.predict(graphs, proteins), tiny_model.predict(graphs, proteins))

    def test_state_mismatch(self, tiny_model, tiny_model_config):
        other = DPIModel.build(tiny_model_config.model_copy(update={"graph_layers": 1}))
        with pytest.raises(CheckpointError):
            other.load_state_dict(tiny_model.state_dict())


# =============================================================================
# Protein embeddings
# =============================================================================

class TestEmbeddings:
    def test_fixture(self, data_dir):
        embeddings = load_embeddings(data_dir / "embeddings.tsv")
        assert sorted(embeddings) == ["P1", "P2", "P3"]
        np.testing.assert_array_equal(embeddings["P2"].features, [-1.0, 0.0, 1.0, 2.5])

    def test_write_reads_back_exactly(self, tmp_path, rng):
        original = {f"id{i}": ProteinEmbedding(f"id{i}", rng.standard_normal(5)) for i in range(3)}
        loaded = load_embeddings(write_embeddings(tmp_path / "e.tsv", original))
        for key, embedding in original.items():
            np.testing.assert_array_equal(loaded[key].features, embedding.features)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("")
        assert load_embeddings(path) == {}

    @pytest.mark.parametrize(
        "body,line",
        [
            ("#dim=2\nA\t1\t2\nA\t3\t4\n", 3),
            ("#dim=2\nA\t1\n", 2),
            ("#dim=2\nA\t1\tx\n", 2),
            ("#dim=2\nA\t1\tnan\n", 2),
            ("dim 2\nA\t1\t2\n", 1),
        ],
    )
    def test_bad_lines(self, tmp_path, body, line):
        path = tmp_path / "bad.tsv"
        path.write_text(body)
        with pytest.raises(IngestionError) as info:
            load_embeddings(path)
        assert info.value.rows[0][0] == line

    def test_npz_residue_matrices(self, tmp_path, rng):
        path = tmp_path / "res.npz"
        np.savez(path, P1=rng.standard_normal((7, 3)), P2=rng.standard_normal((2, 3)))
        embeddings = load_embeddings(path)
        assert embeddings["P1"].residue_level and embeddings["P1"].length == 7
        assert embeddings["P2"].dim == 3

    def test_npz_width_mismatch(self, tmp_path):
        path = tmp_path / "res.npz"
        np.savez(path, P1=np.ones((2, 3)), P2=np.ones((2, 4)))
        with pytest.raises(IngestionError):
            load_embeddings(path)

    def test_missing(self, tmp_path):
        with pytest.raises(UsageError):
            load_embeddings(tmp_path / "x.tsv")


# =============================================================================
# Config files and reports
# =============================================================================

class TestConfigFile:
    def test_file_then_overrides(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("# training\nepochs = 7\nlr=0.01\ndropout_rate = 0.2\nsigmas = 0,0.5\n\n")
        assert read_config_file(path)["epochs"] == "7"
        config = load_run_config(path, {"epochs": 9, "seed": None})
        assert config.train.epochs == 9
        assert config.train.lr == 0.01
        assert config.model.dropout_rate == config.mc.dropout_rate == 0.2
        assert config.noise.sigmas == (0.0, 0.5)

    def test_checkpoint_defaults_sit_below_the_file(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("dropout_rate = 0.2\n")
        defaults = {"dropout_rate": 0.3, "stub_dim": 16}
        config = load_run_config(path, {"dropout_rate": None}, defaults=defaults)
        assert config.mc.dropout_rate == 0.2
        assert config.stub.stub_dim == 16
        assert load_run_config(None, {}, defaults=defaults).mc.dropout_rate == 0.3
        assert load_run_config(path, {"dropout_rate": 0.05}, defaults=defaults).mc.dropout_rate == 0.05

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("learning_rate = 0.1\n")
        with pytest.raises(UsageError):
            load_run_config(path)

    def test_invalid_value(self, tmp_path):
        path = tmp_path / "run.conf"
        path.write_text("protein_kernel = 4\n")
        with pytest.raises(ConfigurationError):
            load_run_config(path)

    def test_missing(self, tmp_path):
        with pytest.raises(UsageError):
            read_config_file(tmp_path / "none.conf")


class TestReports:
    def test_csv_marks_missing_values(self, tmp_path):
        rows = [NoiseSweepRow(sigma=0.0, roc_auc_mc=0.75, roc_auc_plain=None)]
        path = write_csv(tmp_path / "r.csv", to_frame(rows, ["sigma", "roc_auc_mc", "roc_auc_plain"]))
        assert path.read_text() == "sigma,roc_auc_mc,roc_auc_plain\n0.0,0.75,n/a\n"
        assert list(pd.read_csv(path, keep_default_na=False).columns) == ["sigma", "roc_auc_mc", "roc_auc_plain"]

    def test_json_is_sorted(self):
        report = MetricsReport(count=2, roc_auc=None, accuracy=0.5, precision=None, recall=1.0, mc_samples=3)
        payload = json.loads(dumps(report))
        assert payload["precision"] == "n/a"
        assert list(payload) == sorted(payload)
