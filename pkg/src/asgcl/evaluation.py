"""Downstream protocols: linear probe, k-means clustering metrics, robustness."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans
from sklearn.metrics import adjusted_rand_score, f1_score, normalized_mutual_info_score

from .encoder import EncoderWeights, diffusion_matrix, embed
from .graph import Graph

log = logging.getLogger(__name__)

PROBE_LR = 0.01
PROBE_STEPS = 300


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def make_split(n: int, proportions=(0.1, 0.1, 0.8), seed=0) -> Split:
    """Random train/val/test masks; train and val sizes are floor(p * n)."""
    if n < 10:
        raise ValueError("need at least 10 nodes to split")
    if abs(sum(proportions) - 1.0) > 1e-9:
        raise ValueError("proportions must sum to 1")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(np.floor(proportions[0] * n + 1e-9))
    n_val = int(np.floor(proportions[1] * n + 1e-9))
    masks = []
    for idx in (perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:]):
        m = np.zeros(n, dtype=bool)
        m[idx] = True
        masks.append(m)
    return Split(*masks)


def linear_probe(H, labels, split: Split | None = None, seed=0,
                 lr: float = PROBE_LR, steps: int = PROBE_STEPS) -> float:
    """Softmax regression (one linear layer) on frozen embeddings.

    Full-batch Adam; returns test accuracy at the step with the best
    validation accuracy (latest step on ties). If a class is missing from
    the training mask the split is redrawn with the next seed.
    """
    from .trainer import AdamState, adam_step

    H = np.asarray(H, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n, m = H.shape
    classes = int(y.max()) + 1
    split_seed = seed
    if split is None:
        split = make_split(n, seed=split_seed)
    for _ in range(100):
        if len(np.unique(y[split.train])) == len(np.unique(y)):
            break
        split_seed += 1
        log.info("class missing from training mask; redrawing split with seed %d", split_seed)
        split = make_split(n, seed=split_seed)
    else:
        raise ValueError("could not draw a split covering every class")

    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(m, classes))
    b = np.zeros((1, classes))
    params = [W, b]
    state = AdamState.zeros_like(params)
    Xtr, ytr = H[split.train], y[split.train]
    onehot = np.eye(classes)[ytr]

    best_val, best_test = -1.0, 0.0
    for _ in range(steps):
        logits = Xtr @ W + b
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        dlogits = (p - onehot) / len(ytr)
        adam_step(params, [Xtr.T @ dlogits, dlogits.sum(axis=0, keepdims=True)], state, lr)
        pred = np.argmax(H @ W + b, axis=1)
        val = float(np.mean(pred[split.val] == y[split.val]))
        if val >= best_val:
            best_val = val
            best_test = float(np.mean(pred[split.test] == y[split.test]))
    return best_test


def hungarian_mapping(y_true, y_pred) -> dict:
    """Cluster id -> class id maximizing the number of matched nodes."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    size = max(y_true.max(), y_pred.max()) + 1
    counts = np.zeros((size, size), dtype=np.int64)
    np.add.at(counts, (y_pred, y_true), 1)
    rows, cols = linear_sum_assignment(-counts)
    return dict(zip(rows.tolist(), cols.tolist()))


def clustering_accuracy(y_true, y_pred) -> float:
    mapping = hungarian_mapping(y_true, y_pred)
    mapped = np.array([mapping[c] for c in np.asarray(y_pred)])
    return float(np.mean(mapped == np.asarray(y_true)))


def clustering_scores(y_true, y_pred) -> dict:
    y_true = np.asarray(y_true)
    mapping = hungarian_mapping(y_true, y_pred)
    mapped = np.array([mapping[c] for c in np.asarray(y_pred)])
    return {
        "clustering_acc": float(np.mean(mapped == y_true)),
        "nmi": float(normalized_mutual_info_score(y_true, y_pred, average_method="arithmetic")),
        "ari": float(adjusted_rand_score(y_true, y_pred)),
        "fscore": float(f1_score(y_true, mapped, average="macro")),
    }


def cluster_metrics(H, labels, num_classes: int, seed=0) -> dict:
    """k-means (k-means++, 10 restarts, 300 iterations) scored against labels."""
    if num_classes < 2:
        raise ValueError("need at least two classes")
    km = KMeans(n_clusters=num_classes, init="k-means++", n_init=10, max_iter=300, random_state=seed)
    pred = km.fit_predict(np.asarray(H, dtype=np.float64))
    return clustering_scores(labels, pred)


def perturb_for_robustness(g: Graph, edge_drop: float = 0.0, feature_mask: float = 0.0,
                           rng=None) -> Graph:
    """Drop floor(edge_drop*|E|) random edges and zero floor(feature_mask*d) random columns."""
    for name, r in (("edge_drop", edge_drop), ("feature_mask", feature_mask)):
        if not 0 <= r <= 0.8:
            raise ValueError(f"{name} must be in [0, 0.8], got {r}")
    rng = np.random.default_rng(rng)
    edges = g.edge_list()
    n_drop = int(np.floor(edge_drop * len(edges) + 1e-9))
    A = g.adjacency.copy()
    if n_drop:
        drop = edges[rng.choice(len(edges), size=n_drop, replace=False)]
        A[drop[:, 0], drop[:, 1]] = 0.0
        A[drop[:, 1], drop[:, 0]] = 0.0
    X = g.features.copy()
    n_mask = int(np.floor(feature_mask * g.num_features + 1e-9))
    if n_mask:
        cols = rng.choice(g.num_features, size=n_mask, replace=False)
        X[:, cols] = 0.0
    return Graph(A, X, g.labels, dict(g.meta))


def encode(g: Graph, weights: EncoderWeights, self_loops: bool = True) -> np.ndarray:
    """View-1 embeddings of the unaugmented graph."""
    return embed(diffusion_matrix(g, self_loops), g.features, weights)


@dataclass
class MetricReport:
    task: str
    per_seed: list = field(default_factory=list)  # dicts of metric -> value
    dataset: str = ""

    @property
    def metrics(self) -> list:
        return sorted(self.per_seed[0]) if self.per_seed else []

    def mean(self) -> dict:
        return {k: float(np.mean([r[k] for r in self.per_seed])) for k in self.metrics}

    def std(self) -> dict:
        return {k: float(np.std([r[k] for r in self.per_seed])) for k in self.metrics}

    def to_record(self) -> dict:
        return {
            "task": self.task,
            "dataset": self.dataset,
            "seed_count": len(self.per_seed),
            "mean": self.mean(),
            "std": self.std(),
            "per_seed": self.per_seed,
        }


def run_task(H, labels, task: str, seed) -> dict:
    if task == "classification":
        return {"accuracy": linear_probe(H, labels, seed=seed)}
    if task == "clustering":
        return cluster_metrics(H, labels, int(np.max(labels)) + 1, seed=seed)
    raise ValueError(f"unknown task {task!r}")


def evaluate(g: Graph, weights: EncoderWeights | None, task: str, seeds,
             self_loops: bool = True, dataset: str = "") -> MetricReport:
    """Embed with the view-1 encoder (raw features when ``weights`` is None)
    and run ``task`` once per seed."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    if g.labels is None:
        raise ValueError("evaluation needs node labels")
    H = g.features if weights is None else encode(g, weights, self_loops)
    report = MetricReport(task, dataset=dataset)
    for s in seeds:
        report.per_seed.append(run_task(H, g.labels, task, s))
    return report
