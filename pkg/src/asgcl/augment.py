"""Spectrum-preserving edge-flip augmentation.

A Bernoulli flip-probability matrix ``delta`` is optimized so that the
relaxed graph ``A + C * delta`` keeps the normalized-Laplacian spectrum of
``A`` as intact as possible, then augmented adjacencies are sampled from it.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, inv_sqrt_degree, laplacian_from_weights, spectrum

log = logging.getLogger(__name__)

GAP_TOL = 1e-8
DEFAULT_NOISE = 1e-6


class DegenerateSpectrumError(ArithmeticError):
    """Raised when eigenvalues are too close for first-order derivatives."""

    def __init__(self, gap: float):
        super().__init__(f"degenerate spectrum: smallest eigenvalue gap {gap:.3e} < {GAP_TOL:g}")
        self.gap = gap


def _adjacency(g) -> np.ndarray:
    return g.adjacency if isinstance(g, Graph) else np.asarray(g, dtype=np.float64)


def flip_direction(g) -> np.ndarray:
    """+1 where an edge may be added, -1 where one may be removed, 0 on the diagonal."""
    A = _adjacency(g)
    C = (1.0 - A) - A
    np.fill_diagonal(C, 0.0)
    return C


def relaxed_adjacency(g, delta: np.ndarray, base: np.ndarray | None = None) -> np.ndarray:
    A = _adjacency(g)
    W = A if base is None else base
    return W + flip_direction(A) * delta


def spectral_loss(g, delta: np.ndarray) -> float:
    """Squared distance between sorted spectra of the relaxed and original graphs."""
    A = _adjacency(g)
    lam = spectrum(laplacian_from_weights(A))
    lam_aug = spectrum(laplacian_from_weights(relaxed_adjacency(A, delta)))
    return float(np.sum((lam_aug - lam) ** 2))


def spectral_loss_grad(g, delta: np.ndarray, base: np.ndarray | None = None,
                       check_gap: bool = True) -> np.ndarray:
    """Gradient of :func:`spectral_loss` with respect to a symmetric ``delta``.

    Entry (i, j) is the coefficient of a symmetric perturbation E in the
    first-order change ``sum_ij G_ij E_ij``; perturbing the pair (i, j)/(j, i)
    jointly by h changes the loss by ``2 h G_ij``.

    Each eigenvalue contributes ``2 (lam_aug_k - lam_k) u_k u_k^T`` to the
    gradient in the Laplacian; that is pulled back through the degree
    normalization (including its dependence on the degrees) and the flip
    direction ``C``.

    ``base`` replaces the adjacency inside the relaxed graph (used for the
    symmetry-noise fallback); the target spectrum always uses the clean graph.
    """
    A = _adjacency(g)
    C = flip_direction(A)
    W = (A if base is None else base) + C * delta
    lam = spectrum(laplacian_from_weights(A))

    deg = W.sum(axis=1)
    s = inv_sqrt_degree(deg)
    lam_aug, U = np.linalg.eigh(laplacian_from_weights(W))
    if check_gap and len(lam_aug) > 1:
        gap = float(np.min(np.diff(lam_aug)))
        if gap < GAP_TOL:
            raise DegenerateSpectrumError(gap)

    resid = lam_aug - lam
    grad_lap = (U * (2.0 * resid)) @ U.T
    grad_norm_adj = -grad_lap
    # L = I - S W S, S = diag(d^{-1/2}), d = W 1
    direct = grad_norm_adj * np.outer(s, s)
    grad_s = 2.0 * ((grad_norm_adj * W) @ s)
    grad_deg = grad_s * (-0.5 * s**3)
    grad_w = direct + grad_deg[:, None]
    G = 0.5 * (grad_w + grad_w.T) * C
    np.fill_diagonal(G, 0.0)
    return G


def symmetry_noise(A: np.ndarray, eps: float = DEFAULT_NOISE, rng=None) -> np.ndarray:
    """Add eps * (E + E^T) / 2 with E ~ U(0, 1) entrywise."""
    A = np.asarray(A, dtype=np.float64)
    if eps == 0:
        return A.copy()
    rng = np.random.default_rng(rng)
    E = rng.random(A.shape)
    return A + eps * 0.5 * (E + E.T)


def budget_entries(n: int, eps: float) -> int:
    """floor(eps * n^2), the L0 budget counted over the full matrix."""
    return int(math.floor(eps * n * n + 1e-9))


def project_delta(raw: np.ndarray, eps: float) -> np.ndarray:
    """Project onto symmetric [0,1] matrices with at most floor(eps n^2) nonzeros.

    Symmetric pairs are kept or dropped together and count as two entries.
    Ties go to the lexicographically smaller (i, j).
    """
    if not 0 < eps <= 1:
        raise ValueError(f"perturbation budget must be in (0, 1], got {eps}")
    raw = np.asarray(raw, dtype=np.float64)
    n = raw.shape[0]
    D = 0.5 * (raw + raw.T)
    np.fill_diagonal(D, 0.0)
    np.clip(D, 0.0, 1.0, out=D)

    iu, ju = np.triu_indices(n, 1)
    vals = D[iu, ju]
    keep_pairs = budget_entries(n, eps) // 2
    if keep_pairs < len(vals):
        order = np.argsort(-vals, kind="stable")
        dropped = order[keep_pairs:]
        D[iu[dropped], ju[dropped]] = 0.0
        D[ju[dropped], iu[dropped]] = 0.0
    return D


def uniform_delta(n: int, eps: float) -> np.ndarray:
    """Constant-eps flip probabilities projected onto the budget."""
    raw = np.full((n, n), float(eps))
    return project_delta(raw, eps)


@dataclass
class DeltaResult:
    delta: np.ndarray
    eps: float
    trajectory: list = field(default_factory=list)  # (round, loss, nnz)
    noise_rounds: list = field(default_factory=list)

    @property
    def initial_loss(self) -> float:
        return self.trajectory[0][1]

    @property
    def final_loss(self) -> float:
        return self.trajectory[-1][1]


def _grad_with_fallback(A, delta, noise, rng, round_idx, noise_rounds):
    try:
        return spectral_loss_grad(A, delta)
    except DegenerateSpectrumError as exc:
        log.debug("round %d: %s; adding symmetry noise", round_idx, exc)
        noise_rounds.append(round_idx)
        noisy = symmetry_noise(A, noise, rng)
        return spectral_loss_grad(A, delta, base=noisy, check_gap=False)


def optimize_delta(g, eps: float, rounds: int = 5, step: float = 0.5, rng=None,
                   noise: float = DEFAULT_NOISE, max_halvings: int = 5) -> DeltaResult:
    """Projected gradient descent on the spectral loss.

    Starts from the projected uniform matrix. A round whose projected loss
    would exceed the current one is retried with a halved step; after
    ``max_halvings`` failed retries the round keeps the current iterate, so
    the loss trajectory never increases.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not 0 < eps <= 1:
        raise ValueError(f"perturbation budget must be in (0, 1], got {eps}")
    rng = np.random.default_rng(rng)
    A = _adjacency(g)
    n = A.shape[0]

    delta = uniform_delta(n, eps)
    loss = spectral_loss(A, delta)
    result = DeltaResult(delta, eps, [(0, loss, int(np.count_nonzero(delta)))])

    for t in range(1, rounds + 1):
        G = _grad_with_fallback(A, delta, noise, rng, t, result.noise_rounds)
        eta = step
        for _ in range(max_halvings + 1):
            cand = project_delta(delta - eta * G, eps)
            cand_loss = spectral_loss(A, cand)
            if cand_loss <= loss:
                delta, loss = cand, cand_loss
                break
            eta *= 0.5
        result.trajectory.append((t, loss, int(np.count_nonzero(delta))))

    result.delta = delta
    return result


def sample_flip_mask(delta: np.ndarray, rng) -> np.ndarray:
    """One Bernoulli draw per unordered pair i < j, mirrored."""
    n = delta.shape[0]
    iu, ju = np.triu_indices(n, 1)
    u = rng.random(len(iu))
    hit = u < delta[iu, ju]
    M = np.zeros((n, n))
    M[iu[hit], ju[hit]] = 1.0
    M[ju[hit], iu[hit]] = 1.0
    return M


def sample_augmented(g: Graph, delta: np.ndarray, rng) -> Graph:
    rng = np.random.default_rng(rng)
    M = sample_flip_mask(delta, rng)
    A_aug = g.adjacency + flip_direction(g) * M
    return g.with_adjacency(A_aug)


def write_trajectory_csv(result: DeltaResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "loss", "nnz"])
        for t, loss, nnz in result.trajectory:
            w.writerow([t, repr(float(loss)), nnz])
