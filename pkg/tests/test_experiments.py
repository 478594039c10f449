import numpy as np
import pytest

from asgcl.data import generate_sbm
from asgcl.experiments import param_sweep, random_flip, robustness_sweep, spectra_distances
from asgcl.trainer import TrainConfig


def test_random_flip_kinds():
    g = generate_sbm(30, 2, 0.3, 0.05, 0.5, seed=0)
    A = g.adjacency
    rng = np.random.default_rng(0)
    added = random_flip(A, 10, rng, "add")
    assert np.all(added >= A) and np.triu(added != A, 1).sum() == 10
    removed = random_flip(A, 10**6, rng, "remove")
    assert removed.sum() == 0
    flipped = random_flip(A, 7, rng, "flip")
    assert np.triu(flipped != A, 1).sum() == 7
    assert np.array_equal(flipped, flipped.T)
    with pytest.raises(ValueError):
        random_flip(A, 1, rng, "rewire")


def test_spectra_distances_matched_budget():
    g = generate_sbm(50, 3, 0.2, 0.02, 0.5, seed=1)
    out = spectra_distances(g, 0.2, np.random.default_rng(1), rounds=2)
    flips = out["optimized"][0]
    assert out["random_flip"][0] == flips and out["random_add"][0] == flips
    assert out["random_remove"][0] == min(flips, g.num_edges)
    assert all(d >= 0 for _, d in out.values())


def test_harness_rows():
    g = generate_sbm(30, 3, 0.3, 0.03, 0.5, seed=0)
    cfg = TrainConfig(epochs=2, hidden=8, batch=16, rounds=1)
    rows = robustness_sweep(g, cfg, "feature", [0.0, 0.4], seeds=[0])
    assert [r["ratio"] for r in rows] == [0.0, 0.4]
    rows = param_sweep(g, cfg, "k", [0, 1], seeds=[0])
    assert [r["k"] for r in rows] == [0, 1]
    assert all(0 <= r["accuracy_mean"] <= 1 for r in rows)
    with pytest.raises(ValueError):
        param_sweep(g, cfg, "gamma", [1])
