"""Weight-shared asymmetric GCN encoder pair with a manual backward pass.

Each layer is split into a diffusion ``f(H) = S H`` and a transformation
``g(H) = act(H W)``. View 1 runs ``i`` (diffusion, transform) pairs; view 2
runs the same pairs with the same weights on its own graph, followed by
``k`` extra diffusions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, inv_sqrt_degree


def diffusion_matrix(g, self_loops: bool = True) -> np.ndarray:
    """D^{-1/2} (A + I) D^{-1/2}, or D^{-1/2} A D^{-1/2} when ``self_loops`` is off."""
    A = g.adjacency if isinstance(g, Graph) else np.asarray(g, dtype=np.float64)
    if self_loops:
        A = A + np.eye(A.shape[0])
    s = inv_sqrt_degree(A.sum(axis=1))
    S = s[:, None] * A * s[None, :]
    return 0.5 * (S + S.T)


def diffusion(S: np.ndarray, H: np.ndarray) -> np.ndarray:
    if S.shape[1] != H.shape[0]:
        raise ValueError(f"shape mismatch: S {S.shape} vs H {H.shape}")
    return S @ H


def transform(W: np.ndarray, H: np.ndarray, final: bool = False) -> np.ndarray:
    """ReLU(H W) on hidden layers, H W on the final one."""
    if H.shape[1] != W.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape} vs W {W.shape}")
    Z = H @ W
    return Z if final else np.maximum(Z, 0.0)


@dataclass
class EncoderWeights:
    W: list
    k: int = 2

    def __post_init__(self):
        if len(self.W) < 1:
            raise ValueError("need at least one transformation layer")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        for a, b in zip(self.W, self.W[1:]):
            if a.shape[1] != b.shape[0]:
                raise ValueError(f"inconsistent layer shapes {a.shape} -> {b.shape}")

    @property
    def i(self) -> int:
        return len(self.W)

    @classmethod
    def init(cls, in_dim: int, hidden: int = 256, layers: int = 2, k: int = 2, rng=None):
        """Glorot-uniform weights, deterministic for a given generator/seed."""
        rng = np.random.default_rng(rng)
        dims = [in_dim] + [hidden] * layers
        W = []
        for fan_in, fan_out in zip(dims, dims[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            W.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        return cls(W, k)

    def copy(self) -> EncoderWeights:
        return EncoderWeights([w.copy() for w in self.W], self.k)


@dataclass
class Tape:
    """Activations retained by :func:`forward_pair` for the backward pass."""

    S1: np.ndarray
    S2: np.ndarray
    weights: EncoderWeights
    view1: list = field(default_factory=list)  # per layer: (diffused input, pre-activation)
    view2: list = field(default_factory=list)
    tail: list = field(default_factory=list)  # view-2 inputs to each extra diffusion


@dataclass
class ViewEmbeddings:
    H1: np.ndarray
    H2: np.ndarray
    tape: Tape | None = None


def _stack(S, X, W, record):
    H = X
    last = len(W) - 1
    for l, Wl in enumerate(W):
        P = diffusion(S, H)
        Z = P @ Wl
        if record is not None:
            record.append((P, Z))
        H = Z if l == last else np.maximum(Z, 0.0)
    return H


def embed(S: np.ndarray, X: np.ndarray, weights: EncoderWeights, extra: int = 0) -> np.ndarray:
    """Single-view forward without a tape."""
    H = _stack(S, X, weights.W, None)
    for _ in range(extra):
        H = diffusion(S, H)
    return H


def forward_pair(g1, g2, weights: EncoderWeights, self_loops: bool = True,
                 S1: np.ndarray | None = None, S2: np.ndarray | None = None) -> ViewEmbeddings:
    """Embed two views of one graph; ``S1``/``S2`` may be passed precomputed."""
    X = g1.features
    if g2.features.shape != X.shape:
        raise ValueError("views must share the feature matrix")
    if X.shape[1] != weights.W[0].shape[0]:
        raise ValueError(f"feature dim {X.shape[1]} != weight input dim {weights.W[0].shape[0]}")
    if S1 is None:
        S1 = diffusion_matrix(g1, self_loops)
    if S2 is None:
        S2 = diffusion_matrix(g2, self_loops)
    tape = Tape(S1, S2, weights)
    H1 = _stack(S1, X, weights.W, tape.view1)
    H2 = _stack(S2, g2.features, weights.W, tape.view2)
    for _ in range(weights.k):
        tape.tail.append(H2)
        H2 = S2 @ H2
    return ViewEmbeddings(H1, H2, tape)


def _stack_backward(S, W, record, dH, grads):
    last = len(W) - 1
    for l in range(last, -1, -1):
        P, Z = record[l]
        dZ = dH if l == last else dH * (Z > 0)
        grads[l] += P.T @ dZ
        dP = dZ @ W[l].T
        dH = S.T @ dP


def backward_pair(tape: Tape | None, dH1: np.ndarray, dH2: np.ndarray) -> list:
    """Gradients of <dH1, H1> + <dH2, H2> with respect to each shared weight."""
    if tape is None or not tape.view1:
        raise RuntimeError("backward_pair needs the tape from forward_pair")
    W = tape.weights.W
    grads = [np.zeros_like(w) for w in W]
    _stack_backward(tape.S1, W, tape.view1, dH1, grads)
    d = dH2
    for _ in tape.tail:
        d = tape.S2.T @ d
    _stack_backward(tape.S2, W, tape.view2, d, grads)
    return grads
