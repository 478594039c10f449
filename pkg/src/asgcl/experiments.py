"""Experiment harnesses: spectral distance comparison, robustness and parameter sweeps."""

from __future__ import annotations

import csv
import dataclasses

import numpy as np

from .augment import flip_direction, optimize_delta, sample_flip_mask
from .data import generate_sbm
from .evaluation import evaluate, perturb_for_robustness
from .graph import Graph, frobenius_distance, sym_norm_laplacian
from .trainer import TrainConfig, fit

SPECTRA_METHODS = ("optimized", "random_flip", "random_add", "random_remove")
ROBUSTNESS_RATIOS = tuple(round(0.1 * i, 1) for i in range(9))


def _flip(A, rows, cols):
    B = A.copy()
    B[rows, cols] = 1.0 - B[rows, cols]
    B[cols, rows] = B[rows, cols]
    return B


def random_flip(A, count, rng, kind="flip"):
    """Flip ``count`` uniformly chosen pairs; ``kind`` restricts to non-edges
    ("add") or edges ("remove", capped at the edge count)."""
    n = A.shape[0]
    iu, ju = np.triu_indices(n, 1)
    if kind == "flip":
        pool = np.arange(len(iu))
    elif kind == "add":
        pool = np.nonzero(A[iu, ju] == 0)[0]
    elif kind == "remove":
        pool = np.nonzero(A[iu, ju] == 1)[0]
    else:
        raise ValueError(f"unknown flip kind {kind!r}")
    count = min(count, len(pool))
    sel = rng.choice(pool, size=count, replace=False)
    return _flip(A, iu[sel], ju[sel])


def spectra_distances(g: Graph, eps: float, rng, rounds=5, step=0.5) -> dict:
    """Laplacian Frobenius distance of one optimized sample and three random
    baselines flipping the same number of pairs."""
    A = g.adjacency
    L = sym_norm_laplacian(A)
    res = optimize_delta(g, eps, rounds, step, rng)
    M = sample_flip_mask(res.delta, rng)
    flips = int(np.triu(M, 1).sum())
    out = {"optimized": (flips, frobenius_distance(L, sym_norm_laplacian(A + flip_direction(A) * M)))}
    for method, kind in (("random_flip", "flip"), ("random_add", "add"), ("random_remove", "remove")):
        B = random_flip(A, flips, rng, kind)
        out[method] = (int(np.triu(B != A, 1).sum()), frobenius_distance(L, sym_norm_laplacian(B)))
    return out


def spectra_comparison(budgets=(0.2,), seeds=range(10), n=100, blocks=3, p_in=0.1, p_out=0.01,
                       feature_noise=0.5, rounds=5, step=0.5) -> list:
    """One row per (budget, method): mean/std distance over seeds.

    Each seed draws its own SBM and its own samples.
    """
    rows = []
    for eps in budgets:
        per = {m: [] for m in SPECTRA_METHODS}
        for s in seeds:
            g = generate_sbm(n, blocks, p_in, p_out, feature_noise, seed=s)
            rng = np.random.default_rng(s)
            for m, v in spectra_distances(g, eps, rng, rounds, step).items():
                per[m].append(v)
        for m in SPECTRA_METHODS:
            flips = np.array([v[0] for v in per[m]], dtype=float)
            dist = np.array([v[1] for v in per[m]])
            rows.append({"eps": eps, "method": m, "seeds": len(dist),
                         "flips_mean": float(flips.mean()),
                         "distance_mean": float(dist.mean()), "distance_std": float(dist.std())})
    return rows


def _accuracy(g, weights, cfg, seeds):
    rep = evaluate(g, weights, "classification", seeds, self_loops=not cfg.raw_diffusion)
    return rep.mean()["accuracy"], rep.std()["accuracy"]


def robustness_sweep(g: Graph, cfg: TrainConfig, kind="edge", ratios=ROBUSTNESS_RATIOS,
                     seeds=range(5), retrain=False, weights=None) -> list:
    """Accuracy under edge deletion or feature-column masking.

    Without ``retrain`` the encoder trained on the clean graph (or the
    ``weights`` given) re-embeds each perturbed graph.
    """
    if kind not in ("edge", "feature"):
        raise ValueError(f"unknown perturbation kind {kind!r}")
    if not retrain and weights is None:
        weights = fit(g, cfg).weights
    rows = []
    for r in ratios:
        rng = np.random.default_rng(cfg.seed)
        pg = perturb_for_robustness(g, r if kind == "edge" else 0.0, r if kind == "feature" else 0.0, rng)
        w = fit(pg, cfg).weights if retrain else weights
        mean, std = _accuracy(pg, w, cfg, seeds)
        rows.append({"kind": kind, "ratio": r, "retrain": retrain, "accuracy_mean": mean, "accuracy_std": std})
    return rows


def param_sweep(g: Graph, cfg: TrainConfig, param: str, values, seeds=range(5)) -> list:
    """Retrain and probe for each value of ``eps``, ``k`` or ``alpha_beta``
    (values are (alpha, beta) pairs for the latter)."""
    rows = []
    for v in values:
        if param == "eps":
            point = dataclasses.replace(cfg, eps=float(v), eps_views=None)
            row = {"eps": float(v)}
        elif param == "k":
            point = dataclasses.replace(cfg, k=int(v))
            row = {"k": int(v)}
        elif param == "alpha_beta":
            a, b = v
            point = dataclasses.replace(cfg, alpha=float(a), beta=float(b))
            row = {"alpha": float(a), "beta": float(b)}
        else:
            raise ValueError(f"unknown sweep parameter {param!r}")
        mean, std = _accuracy(g, fit(g, point).weights, point, seeds)
        row.update(accuracy_mean=mean, accuracy_std=std)
        rows.append(row)
    return rows


def write_rows_csv(rows, path) -> None:
    if not rows:
        raise ValueError("no rows to write")
    fields = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
