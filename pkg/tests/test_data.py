import math
import struct

import numpy as np
import pytest

from asgcl.config import ConfigError, RunConfig
from asgcl.data import (
    DataError,
    DatasetSpec,
    SBMParams,
    generate_sbm,
    load_dataset,
    read_edge_list,
    read_features,
    read_labels,
    save_dataset,
)
from asgcl.trainer import TrainConfig


def test_edge_file_path_graph(tmp_path):
    (tmp_path / "e.txt").write_text("0 1\n1 2\n")
    (tmp_path / "x.csv").write_text("1,0\n0,1\n1,1\n")
    g = load_dataset(DatasetSpec(name="p3", edges=str(tmp_path / "e.txt"), features=str(tmp_path / "x.csv")))
    np.testing.assert_array_equal(g.adjacency, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    assert g.labels is None


def test_edge_file_mirrors_and_dedupes(tmp_path):
    (tmp_path / "e.txt").write_text("0 1\n1 0\n\n# comment\n2   1\n")
    assert read_edge_list(tmp_path / "e.txt").tolist() == [[0, 1], [1, 0], [2, 1]]


def test_edge_file_malformed_line_number(tmp_path):
    (tmp_path / "e.txt").write_text("0 1\n1 two\n")
    with pytest.raises(DataError, match=":2:"):
        read_edge_list(tmp_path / "e.txt")


def test_binary_features(tmp_path):
    vals = [0.5, -1.0, 2.0, 3.25, 0.0, 7.0]
    (tmp_path / "x.bin").write_bytes(struct.pack("<II", 3, 2) + struct.pack("<6f", *vals))
    X = read_features(tmp_path / "x.bin")
    np.testing.assert_array_equal(X, np.array(vals).reshape(3, 2))


def test_binary_features_truncated(tmp_path):
    (tmp_path / "x.bin").write_bytes(struct.pack("<II", 3, 2) + b"\0" * 8)
    with pytest.raises(DataError):
        read_features(tmp_path / "x.bin")


def test_labels_remapped(tmp_path, caplog):
    (tmp_path / "y.txt").write_text("3\n7\n3\n")
    assert read_labels(tmp_path / "y.txt").tolist() == [0, 1, 0]
    assert "remapping" in caplog.text


def test_row_count_mismatch(tmp_path):
    (tmp_path / "e.txt").write_text("0 5\n")
    (tmp_path / "x.csv").write_text("1\n2\n")
    (tmp_path / "y.txt").write_text("0\n1\n0\n")
    spec = DatasetSpec(edges=str(tmp_path / "e.txt"), features=str(tmp_path / "x.csv"))
    with pytest.raises(DataError):
        load_dataset(spec)
    spec = DatasetSpec(edges=str(tmp_path / "e.txt"), features=str(tmp_path / "x.csv"),
                       labels=str(tmp_path / "y.txt"))
    with pytest.raises(DataError):
        load_dataset(spec)


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_dataset(DatasetSpec(edges=str(tmp_path / "nope"), features=str(tmp_path / "nope2")))


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_dataset_round_trip(tmp_path, suffix):
    g = generate_sbm(30, 3, 0.3, 0.05, 0.5, seed=1)
    if suffix == ".bin":  # float32 storage
        g = g.with_features(g.features.astype(np.float32).astype(np.float64))
    paths = [str(tmp_path / n) for n in ("e.txt", "x" + suffix, "y.txt")]
    save_dataset(g, *paths)
    h = load_dataset(DatasetSpec(edges=paths[0], features=paths[1], labels=paths[2]))
    assert h == g


def test_sbm_edgeless_and_deterministic():
    g = generate_sbm(12, 3, 0.0, 0.0, 0.5, seed=0)
    assert g.num_edges == 0
    assert generate_sbm(50, 2, 0.3, 0.1, 0.5, 4) == generate_sbm(50, 2, 0.3, 0.1, 0.5, 4)


def test_sbm_features_and_labels():
    g = generate_sbm(10, 3, 0.5, 0.1, 0.25, seed=2)
    assert g.labels.tolist() == [0, 0, 0, 0, 1, 1, 1, 2, 2, 2]
    noise = g.features - np.eye(3)[g.labels]
    assert np.all(np.abs(noise) <= 0.25)


def test_sbm_invalid_probabilities():
    with pytest.raises(ValueError):
        generate_sbm(10, 2, 0.1, 0.2, 0.5)
    with pytest.raises(ValueError):
        generate_sbm(10, 2, 1.5, 0.2, 0.5)


def test_sbm_expected_edge_count():
    # oracle: sum of independent Bernoulli pairs
    within = 3 * math.comb(100, 2)
    between = 3 * 100 * 100
    mean = within * 0.1 + between * 0.01
    var = within * 0.1 * 0.9 + between * 0.01 * 0.99
    assert mean == pytest.approx(1785.0)
    counts = [generate_sbm(300, 3, 0.1, 0.01, 0.5, seed=s).num_edges for s in range(100)]
    assert abs(np.mean(counts) - mean) < 3 * math.sqrt(var / 100)


def test_dataset_spec_exclusive():
    with pytest.raises(ValueError):
        DatasetSpec(edges="e", features="x", sbm=SBMParams())
    with pytest.raises(ValueError):
        DatasetSpec(sbm=None)


def test_run_config_round_trip():
    cfg = RunConfig(train=TrainConfig(epochs=7, eps_views=(0.05, 0.2), no_upper=True), out="runs/x")
    again = RunConfig.from_json(cfg.to_json())
    assert again == cfg
    files = RunConfig(dataset=DatasetSpec(name="cora", edges="e", features="x", labels="y"))
    assert RunConfig.from_json(files.to_json()) == files


@pytest.mark.parametrize("text", [
    "not json",
    '{"bogus": 1}',
    '{"train": {"epochs": 1, "nope": 2}}',
    '{"train": {"eps": 0}}',
    '{"dataset": {"edges": "e"}}',
    '{"eval": {"tasks": ["dance"]}}',
])
def test_run_config_schema_errors(text):
    with pytest.raises(ConfigError):
        RunConfig.from_json(text)
