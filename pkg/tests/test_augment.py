import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from asgcl.augment import (
    DegenerateSpectrumError,
    flip_direction,
    optimize_delta,
    project_delta,
    sample_augmented,
    spectral_loss,
    spectral_loss_grad,
    symmetry_noise,
    uniform_delta,
    write_trajectory_csv,
)
from asgcl.data import generate_sbm
from asgcl.graph import build_graph

from conftest import er_graph


def loop_laplacian(W):
    """Independent elementwise construction used as an oracle."""
    n = len(W)
    d = [sum(W[i]) for i in range(n)]
    L = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if d[i] > 0 and d[j] > 0:
                L[i, j] = -W[i][j] / np.sqrt(d[i] * d[j])
        L[i, i] += 1.0
    return L


def loop_spectral_loss(A, delta):
    n = len(A)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            c = 0.0 if i == j else (1.0 if A[i][j] == 0 else -1.0)
            W[i, j] = A[i][j] + c * delta[i][j]
    a = np.sort(np.linalg.eigvals(loop_laplacian(W)).real)
    b = np.sort(np.linalg.eigvals(loop_laplacian(A)).real)
    return float(np.sum((a - b) ** 2))


def feasible_delta(n, eps, rng):
    return project_delta(rng.random((n, n)), eps)


def pair_fd(A, delta, i, j, h=1e-4):
    E = np.zeros_like(delta)
    E[i, j] = E[j, i] = h
    return (spectral_loss(A, delta + E) - spectral_loss(A, delta - E)) / (2 * h) / 2


# flip direction

def test_flip_direction_examples(triangle):
    C = flip_direction(triangle)
    off = ~np.eye(3, dtype=bool)
    assert np.all(C[off] == -1) and np.all(np.diag(C) == 0)
    C = flip_direction(build_graph([], np.zeros((3, 1))))
    assert np.all(C[off] == 1) and np.all(np.diag(C) == 0)
    C = flip_direction(build_graph([(0, 1)], np.zeros((3, 1))))
    assert C[0, 1] == C[1, 0] == -1
    assert C[0, 2] == C[2, 0] == C[1, 2] == C[2, 1] == 1


# spectral loss

def test_spectral_loss_zero_delta(triangle):
    assert spectral_loss(triangle, np.zeros((3, 3))) == 0.0


def test_spectral_loss_triangle_single_flip(triangle):
    D = np.zeros((3, 3))
    D[0, 1] = D[1, 0] = 1.0
    expected = loop_spectral_loss(triangle.adjacency, D)
    assert expected == pytest.approx(0.5, abs=1e-12)
    assert spectral_loss(triangle, D) == pytest.approx(expected, abs=1e-12)


def test_spectral_loss_matches_independent_recomputation():
    rng = np.random.default_rng(11)
    for _ in range(5):
        g = er_graph(16, 0.3, rng)
        D = feasible_delta(16, 0.25, rng)
        assert spectral_loss(g, D) == pytest.approx(loop_spectral_loss(g.adjacency, D), rel=1e-10, abs=1e-12)


# gradient

def test_grad_zero_delta_is_zero():
    rng = np.random.default_rng(0)
    g = er_graph(12, 0.3, rng)
    np.testing.assert_allclose(spectral_loss_grad(g, np.zeros((12, 12)), check_gap=False), 0, atol=1e-12)


def test_grad_finite_differences_n12():
    rng = np.random.default_rng(5)
    g = er_graph(12, 0.35, rng)
    D = feasible_delta(12, 0.4, rng)
    G = spectral_loss_grad(g, D)
    assert np.allclose(G, G.T) and np.all(np.diag(G) == 0)
    for i in range(12):
        for j in range(i + 1, 12):
            if abs(G[i, j]) > 1e-6:
                fd = pair_fd(g.adjacency, D, i, j)
                assert abs(fd - G[i, j]) / abs(G[i, j]) < 1e-3


def test_first_order_eigenvalue_derivative():
    rng = np.random.default_rng(2)
    n = 8
    M = rng.normal(size=(n, n))
    L = (M + M.T) / 2
    E = rng.normal(size=(n, n))
    E = (E + E.T) / 2
    lam, U = np.linalg.eigh(L)
    t = 1e-6
    numeric = (np.linalg.eigvalsh(L + t * E) - lam) / t
    analytic = np.einsum("ik,ij,jk->k", U, E, U)
    np.testing.assert_allclose(numeric, analytic, atol=1e-4)


def test_degenerate_spectrum_signalled(triangle):
    # small uniform delta keeps the triangle's repeated eigenvalue 1.5
    D = np.full((3, 3), 0.1)
    np.fill_diagonal(D, 0)
    with pytest.raises(DegenerateSpectrumError):
        spectral_loss_grad(triangle, D)


# noise

def test_symmetry_noise():
    A = np.zeros((5, 5))
    np.testing.assert_array_equal(symmetry_noise(A, 0.0, 1), A)
    out = symmetry_noise(A, 1e-3, np.random.default_rng(4))
    diff = out - A
    np.testing.assert_array_equal(diff, diff.T)
    assert diff.min() >= 0 and diff.max() <= 1e-3
    np.testing.assert_array_equal(symmetry_noise(A, 1e-3, np.random.default_rng(9)),
                                  symmetry_noise(A, 1e-3, np.random.default_rng(9)))


# projection

def test_project_unchanged_full_budget():
    X = np.full((4, 4), 0.5)
    P = project_delta(X, 1.0)
    expected = X.copy()
    np.fill_diagonal(expected, 0)
    np.testing.assert_array_equal(P, expected)


def test_project_keeps_largest_pair():
    X = np.zeros((3, 3))
    for (i, j), v in {(0, 1): 0.2, (0, 2): 0.9, (1, 2): 0.1}.items():
        X[i, j] = X[j, i] = v
    # brute force: budget floor(eps * 9) = 2 entries = one symmetric pair
    pairs = sorted(((X[i, j], (i, j)) for i in range(3) for j in range(i + 1, 3)), key=lambda t: -t[0])
    keep = pairs[0][1]
    P = project_delta(X, 2 / 9)
    assert keep == (0, 2)
    assert P[0, 2] == P[2, 0] == 0.9
    assert np.count_nonzero(P) == 2


def test_project_clamps():
    X = np.array([[0, 1.7, -0.3], [1.7, 0, 0.4], [-0.3, 0.4, 0]])
    P = project_delta(X, 1.0)
    assert P[0, 1] == 1.0 and P[0, 2] == 0.0 and P[1, 2] == 0.4


def test_project_lexicographic_ties():
    P = project_delta(np.full((4, 4), 0.3), 4 / 16)
    nz = sorted(zip(*np.nonzero(np.triu(P))))
    assert nz == [(0, 1), (0, 2)]


@pytest.mark.parametrize("eps", [0.0, -0.1, 1.5])
def test_project_rejects_bad_budget(eps):
    with pytest.raises(ValueError):
        project_delta(np.zeros((3, 3)), eps)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-1, 2, allow_nan=False)), st.floats(0.01, 1.0))
def test_project_invariants_and_idempotence(X, eps):
    P = project_delta(X, eps)
    assert np.array_equal(P, P.T) and np.all(np.diag(P) == 0)
    assert P.min() >= 0 and P.max() <= 1
    assert np.count_nonzero(P) <= int(np.floor(eps * 36 + 1e-9))
    np.testing.assert_array_equal(project_delta(P, eps), P)


# optimization

def test_optimize_edgeless_nonincreasing():
    g = build_graph([], np.zeros((8, 1)))
    res = optimize_delta(g, 0.3, rounds=5, rng=0)
    losses = [t[1] for t in res.trajectory]
    assert len(losses) == 6
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def test_optimize_zero_step_returns_projected_init():
    rng = np.random.default_rng(1)
    g = er_graph(10, 0.3, rng)
    res = optimize_delta(g, 0.2, rounds=1, step=0.0, rng=0)
    np.testing.assert_array_equal(res.delta, uniform_delta(10, 0.2))


def test_optimize_reduces_loss_on_sbm():
    g = generate_sbm(60, 3, 0.2, 0.02, 0.5, seed=3)
    res = optimize_delta(g, 0.2, rounds=5, step=0.5, rng=3)
    assert res.final_loss < res.initial_loss
    losses = [t[1] for t in res.trajectory]
    assert all(b <= a for a, b in zip(losses, losses[1:]))


def test_optimize_deterministic():
    g = generate_sbm(40, 2, 0.3, 0.05, 0.5, seed=0)
    a = optimize_delta(g, 0.2, rounds=3, rng=42)
    b = optimize_delta(g, 0.2, rounds=3, rng=42)
    np.testing.assert_array_equal(a.delta, b.delta)
    assert a.trajectory == b.trajectory


def test_optimize_rejects_bad_args(triangle):
    with pytest.raises(ValueError):
        optimize_delta(triangle, 0.2, rounds=0)
    with pytest.raises(ValueError):
        optimize_delta(triangle, 0.0)


def test_trajectory_csv(tmp_path):
    g = generate_sbm(30, 2, 0.3, 0.05, 0.5, seed=0)
    res = optimize_delta(g, 0.2, rounds=2, rng=0)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(res, path)
    rows = list(csv.DictReader(open(path)))
    assert [int(r["round"]) for r in rows] == [0, 1, 2]
    assert float(rows[-1]["loss"]) == res.final_loss
    assert int(rows[0]["nnz"]) == np.count_nonzero(uniform_delta(30, 0.2))


# sampling

def test_sample_zero_delta_is_identity(triangle):
    out = sample_augmented(triangle, np.zeros((3, 3)), 0)
    assert out == triangle


def test_sample_deterministic_flip(triangle):
    D = np.zeros((3, 3))
    D[0, 1] = D[1, 0] = 1.0
    out = sample_augmented(triangle, D, 0)
    assert out.adjacency[0, 1] == 0 and out.adjacency[1, 0] == 0
    assert out.num_edges == 2
    np.testing.assert_array_equal(out.features, triangle.features)


def test_sample_edge_count_statistics():
    n, p, draws = 10, 0.3, 1000
    g = build_graph([], np.zeros((n, 1)))
    D = np.full((n, n), p)
    np.fill_diagonal(D, 0)
    rng = np.random.default_rng(123)
    counts = [sample_augmented(g, D, rng).num_edges for _ in range(draws)]
    pairs = n * (n - 1) / 2
    sigma = np.sqrt(pairs * p * (1 - p) / draws)
    assert abs(np.mean(counts) - p * pairs) < 3 * sigma


def test_sample_flip_budget_and_determinism():
    rng = np.random.default_rng(8)
    g = er_graph(20, 0.2, rng)
    D = feasible_delta(20, 0.1, rng)
    for seed in range(20):
        out = sample_augmented(g, D, seed)
        flips = int(np.triu(out.adjacency != g.adjacency, 1).sum())
        assert flips <= np.count_nonzero(np.triu(D, 1))
        A = out.adjacency
        assert np.array_equal(A, A.T) and np.all(np.diag(A) == 0)
    assert sample_augmented(g, D, 5) == sample_augmented(g, D, 5)
