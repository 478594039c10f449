"""Dense graph container, symmetric normalized Laplacian and spectral helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with a dense {0,1} adjacency and node features.

    Instances are treated as immutable: the arrays are flagged read-only on
    construction.
    """

    adjacency: np.ndarray
    features: np.ndarray
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=np.float64)
        X = np.asarray(self.features, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise GraphError(f"adjacency must be square, got {A.shape}")
        if X.ndim != 2 or X.shape[0] != A.shape[0]:
            raise GraphError(
                f"feature rows ({X.shape[0] if X.ndim else 0}) != node count ({A.shape[0]})"
            )
        if not np.array_equal(A, A.T):
            raise GraphError("adjacency is not symmetric")
        if np.any(np.diag(A) != 0):
            raise GraphError("adjacency has self-loops")
        if not np.all((A == 0) | (A == 1)):
            raise GraphError("adjacency entries must be 0 or 1")
        A = A.copy()
        X = X.copy()
        A.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "features", X)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64).copy()
            if y.shape != (A.shape[0],):
                raise GraphError(f"labels must have shape ({A.shape[0]},), got {y.shape}")
            y.setflags(write=False)
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def edge_list(self) -> np.ndarray:
        """Undirected edges as an (E, 2) array with i < j, in row-major order."""
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return np.stack([i, j], axis=1)

    def with_adjacency(self, adjacency: np.ndarray) -> Graph:
        return Graph(adjacency, self.features, self.labels, dict(self.meta))

    def with_features(self, features: np.ndarray) -> Graph:
        return Graph(self.adjacency, features, self.labels, dict(self.meta))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None
            and other.labels is not None
            and np.array_equal(self.labels, other.labels)
        )
        return (
            np.array_equal(self.adjacency, other.adjacency)
            and np.array_equal(self.features, other.features)
            and same_labels
        )


def build_graph(pairs, features, labels=None) -> Graph:
    """Build a Graph from undirected index pairs; duplicates collapse."""
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise GraphError("features must be a 2-d matrix")
    n = X.shape[0]
    A = np.zeros((n, n))
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    if len(pairs):
        if pairs.min() < 0 or pairs.max() >= n:
            raise GraphError(f"node index out of range [0, {n})")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise GraphError("self-loop pairs are not allowed")
        A[pairs[:, 0], pairs[:, 1]] = 1.0
        A[pairs[:, 1], pairs[:, 0]] = 1.0
    return Graph(A, X, labels)


def inv_sqrt_degree(degrees: np.ndarray) -> np.ndarray:
    """d^{-1/2} with the convention 0 for zero degree."""
    d = np.asarray(degrees, dtype=np.float64)
    out = np.zeros_like(d)
    pos = d > 0
    out[pos] = 1.0 / np.sqrt(d[pos])
    return out


def laplacian_from_weights(W: np.ndarray) -> np.ndarray:
    """I - D^{-1/2} W D^{-1/2} for any symmetric nonnegative weight matrix."""
    W = np.asarray(W, dtype=np.float64)
    s = inv_sqrt_degree(W.sum(axis=1))
    L = -(s[:, None] * W * s[None, :])
    L[np.diag_indices_from(L)] += 1.0
    return 0.5 * (L + L.T)


def sym_norm_laplacian(g: Graph | np.ndarray) -> np.ndarray:
    """Symmetric normalized Laplacian of a graph (or raw adjacency)."""
    A = g.adjacency if isinstance(g, Graph) else g
    return laplacian_from_weights(A)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.T


def eigendecompose(L: np.ndarray) -> EigenDecomposition:
    """Ascending eigenpairs of a symmetric matrix."""
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise GraphError(f"expected a square matrix, got {L.shape}")
    if not np.allclose(L, L.T, atol=1e-10, rtol=0):
        raise GraphError("matrix is not symmetric")
    try:
        w, U = np.linalg.eigh(L)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(L) if np.all(np.isfinite(L)) else float("nan")
        raise np.linalg.LinAlgError(
            f"eigensolver did not converge (n={L.shape[0]}, cond={cond:.3e}, "
            f"finite={bool(np.all(np.isfinite(L)))})"
        ) from exc
    return EigenDecomposition(w, U)


def spectrum(L: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(np.asarray(L, dtype=np.float64))


def frobenius_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise GraphError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))
