"""Contrastive objective: two-way InfoNCE plus lower/upper triplet bounds."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

NORM_EPS = 1e-12


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 5.0
    beta: float = 9.0
    tau: float = 1.0
    batch: int = 128
    lower: bool = True
    upper: bool = True

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0 or self.tau <= 0:
            raise ValueError("alpha, beta and tau must be positive")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


@dataclass(frozen=True)
class LossBreakdown:
    infonce: float
    lower: float
    upper: float
    total: float

    @classmethod
    def of(cls, infonce: float, lower: float, upper: float) -> LossBreakdown:
        return cls(infonce, lower, upper, infonce + lower + upper)


def cosine_sim(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu < NORM_EPS or nv < NORM_EPS:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def _normalize(H):
    norms = np.linalg.norm(H, axis=1)
    ok = norms >= NORM_EPS
    inv = np.where(ok, 1.0 / np.where(ok, norms, 1.0), 0.0)
    return H * inv[:, None], inv


def _normalize_backward(Z, inv, dZ):
    # d(h/|h|) = (I - z z^T) dh / |h|; rows below NORM_EPS are constant zero
    radial = np.sum(Z * dZ, axis=1, keepdims=True)
    return (dZ - Z * radial) * inv[:, None]


def _half_infonce(Za, Zb, tau):
    """Per-anchor terms with Za as anchors, plus gradients w.r.t. Za and Zb."""
    B = Za.shape[0]
    cross = Za @ Zb.T / tau
    intra = Za @ Za.T / tau
    eye = np.eye(B, dtype=bool)
    intra_masked = np.where(eye, -np.inf, intra)
    logits = np.concatenate([cross, intra_masked], axis=1)
    mx = logits.max(axis=1, keepdims=True)
    ex = np.exp(logits - mx)
    denom = ex.sum(axis=1, keepdims=True)
    terms = -np.diag(cross) + (np.log(denom) + mx)[:, 0]

    p = ex / denom
    d_cross = p[:, :B] - np.eye(B)
    d_intra = p[:, B:]
    dZa = (d_cross @ Zb + d_intra @ Za + d_intra.T @ Za) / tau
    dZb = d_cross.T @ Za / tau
    return terms, dZa, dZb


def infonce(H1, H2, anchors, tau: float = 1.0, return_grad: bool = False):
    """Symmetric InfoNCE averaged over the anchor batch.

    Negatives for anchor a are the other anchors' embeddings in both the
    opposite view and the anchor's own view.
    """
    anchors = np.asarray(anchors, dtype=np.int64)
    if anchors.size == 0:
        raise ValueError("anchor set is empty")
    B = anchors.size
    Z1, inv1 = _normalize(np.asarray(H1, dtype=np.float64)[anchors])
    Z2, inv2 = _normalize(np.asarray(H2, dtype=np.float64)[anchors])
    t12, g1a, g2b = _half_infonce(Z1, Z2, tau)
    t21, g2a, g1b = _half_infonce(Z2, Z1, tau)
    value = float((t12.sum() + t21.sum()) / (2 * B))
    if not return_grad:
        return value
    scale = 1.0 / (2 * B)
    dZ1 = (g1a + g1b) * scale
    dZ2 = (g2a + g2b) * scale
    dH1 = np.zeros_like(np.asarray(H1, dtype=np.float64))
    dH2 = np.zeros_like(np.asarray(H2, dtype=np.float64))
    np.add.at(dH1, anchors, _normalize_backward(Z1, inv1, dZ1))
    np.add.at(dH2, anchors, _normalize_backward(Z2, inv2, dZ2))
    return value, dH1, dH2


def sample_negatives(anchors, rng) -> np.ndarray:
    """For each anchor, a uniformly drawn other anchor of the batch.

    Returns node indices aligned with ``anchors``.
    """
    anchors = np.asarray(anchors, dtype=np.int64)
    B = anchors.size
    if B < 2:
        raise ValueError("negative sampling needs at least two anchors")
    r = rng.integers(0, B - 1, size=B)
    pos = np.arange(B)
    r = r + (r >= pos)
    return anchors[r]


def _distances(H1, H2, negatives, anchors):
    pos_diff = H1[anchors] - H2[anchors]
    neg_diff = H1[anchors] - H2[negatives]
    return pos_diff, neg_diff, np.linalg.norm(pos_diff, axis=1), np.linalg.norm(neg_diff, axis=1)


def _unit(diff, dist):
    safe = np.where(dist > 0, dist, 1.0)
    return np.where((dist > 0)[:, None], diff / safe[:, None], 0.0)


def _hinge(H1, H2, negatives, anchors, margin, sign, return_grad):
    # sign=+1: max(0, d_pos - d_neg + margin); sign=-1: max(0, d_neg - d_pos - margin)
    H1 = np.asarray(H1, dtype=np.float64)
    H2 = np.asarray(H2, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.int64)
    negatives = np.asarray(negatives, dtype=np.int64)
    pos_diff, neg_diff, d_pos, d_neg = _distances(H1, H2, negatives, anchors)
    arg = sign * (d_pos - d_neg) + (margin if sign > 0 else -margin)
    value = float(np.maximum(arg, 0.0).sum())
    if not return_grad:
        return value
    active = (arg > 0).astype(np.float64)[:, None] * sign
    u_pos = _unit(pos_diff, d_pos) * active
    u_neg = _unit(neg_diff, d_neg) * active
    dH1 = np.zeros_like(H1)
    dH2 = np.zeros_like(H2)
    np.add.at(dH1, anchors, u_pos - u_neg)
    np.add.at(dH2, anchors, -u_pos)
    np.add.at(dH2, negatives, u_neg)
    return value, dH1, dH2


def lower_loss(H1, H2, negatives, anchors, alpha: float, return_grad: bool = False):
    """Sum over anchors of max(0, |h1-h2| - |h1-h_neg| + alpha)."""
    return _hinge(H1, H2, negatives, anchors, alpha, +1, return_grad)


def upper_loss(H1, H2, negatives, anchors, beta: float, return_grad: bool = False):
    """Sum over anchors of max(0, |h1-h_neg| - |h1-h2| - beta)."""
    return _hinge(H1, H2, negatives, anchors, beta, -1, return_grad)


def total_loss(H1, H2, anchors, cfg: LossConfig, rng=None, negatives=None):
    """Loss breakdown plus gradients with respect to H1 and H2.

    ``negatives`` can be given explicitly; otherwise one is sampled per
    anchor from ``rng`` whenever the batch has at least two anchors.
    """
    H1 = np.asarray(H1, dtype=np.float64)
    H2 = np.asarray(H2, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.int64)
    nce, dH1, dH2 = infonce(H1, H2, anchors, cfg.tau, return_grad=True)
    lo = up = 0.0
    if anchors.size < 2:
        if cfg.lower or cfg.upper:
            log.info("batch of one anchor: triplet bound losses skipped")
        return LossBreakdown.of(nce, lo, up), dH1, dH2
    if negatives is None:
        negatives = sample_negatives(anchors, np.random.default_rng(rng))
    if cfg.lower:
        lo, g1, g2 = lower_loss(H1, H2, negatives, anchors, cfg.alpha, return_grad=True)
        dH1 += g1
        dH2 += g2
    if cfg.upper:
        up, g1, g2 = upper_loss(H1, H2, negatives, anchors, cfg.beta, return_grad=True)
        dH1 += g1
        dH2 += g2
    return LossBreakdown.of(nce, lo, up), dH1, dH2
