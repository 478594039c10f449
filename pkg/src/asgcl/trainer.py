"""Contrastive training loop, Adam, and checkpoint files."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .augment import optimize_delta, sample_augmented, uniform_delta
from .encoder import EncoderWeights, backward_pair, diffusion_matrix, forward_pair
from .graph import Graph
from .losses import LossBreakdown, LossConfig, sample_negatives, total_loss

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"ASGCL1"
CHECKPOINT_VERSION = 1


class TrainingError(FloatingPointError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 1000
    batch: int = 128
    lr: float = 0.001
    weight_decay: float = 5e-5
    i: int = 2
    k: int = 2
    hidden: int = 256
    eps: float = 0.2
    eps_views: tuple | None = None  # (eps_1, eps_2); default (eps / 2, eps)
    rounds: int = 5
    step: float = 0.5
    noise: float = 1e-6
    alpha: float = 5.0
    beta: float = 9.0
    tau: float = 1.0
    seed: int = 0
    no_spectral: bool = False
    symmetric_encoder: bool = False
    no_upper: bool = False
    no_lower: bool = False
    resample_each_epoch: bool = True
    raw_diffusion: bool = False

    def __post_init__(self):
        if self.eps_views is not None:
            self.eps_views = tuple(float(e) for e in self.eps_views)
        positive = ["batch", "lr", "i", "hidden", "eps", "rounds", "alpha", "beta", "tau"]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ["epochs", "k", "weight_decay", "step", "noise"]:
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        for e in self.view_budgets():
            if not 0 < e <= 1:
                raise ValueError(f"perturbation budget must be in (0, 1], got {e}")

    def view_budgets(self) -> tuple:
        return self.eps_views if self.eps_views is not None else (self.eps / 2, self.eps)

    def loss_config(self) -> LossConfig:
        return LossConfig(self.alpha, self.beta, self.tau, self.batch,
                          lower=not self.no_lower, upper=not self.no_upper)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["eps_views"] is not None:
            d["eps_views"] = list(d["eps_views"])
        return d


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params) -> AdamState:
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params: list, grads: list, state: AdamState, lr: float,
              weight_decay: float = 0.0) -> None:
    """In-place Adam update with bias correction; decay is added to the gradient."""
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient passed to adam_step")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch in adam_step: {p.shape} vs {g.shape}")
        if weight_decay:
            g = g + weight_decay * p
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


@dataclass
class FitResult:
    weights: EncoderWeights
    state: AdamState
    log: list = field(default_factory=list)  # one LossBreakdown per epoch
    deltas: tuple = ()
    augment: tuple = ()  # DeltaResult per view, empty with no_spectral


def _view_deltas(g, cfg, rng):
    eps1, eps2 = cfg.view_budgets()
    if cfg.no_spectral:
        return (uniform_delta(g.n, eps1), uniform_delta(g.n, eps2)), ()
    r1 = optimize_delta(g, eps1, cfg.rounds, cfg.step, rng, cfg.noise)
    r2 = optimize_delta(g, eps2, cfg.rounds, cfg.step, rng, cfg.noise)
    return (r1.delta, r2.delta), (r1, r2)


def fit(g: Graph, cfg: TrainConfig, progress=None) -> FitResult:
    """Train the encoder pair on ``g``.

    The run draws from a single generator seeded with ``cfg.seed`` in the
    order: weight init, flip-probability optimization, then per epoch the
    two view masks, the anchor permutation, and per batch the negatives.
    """
    if g.n < 2:
        raise ValueError("graph needs at least two nodes")
    rng = np.random.default_rng(cfg.seed)
    k = 0 if cfg.symmetric_encoder else cfg.k
    weights = EncoderWeights.init(g.num_features, cfg.hidden, cfg.i, k, rng)
    state = AdamState.zeros_like(weights.W)
    loss_cfg = cfg.loss_config()
    self_loops = not cfg.raw_diffusion

    deltas, aug = _view_deltas(g, cfg, rng)
    result = FitResult(weights, state, [], deltas, aug)

    S1 = S2 = None
    v1 = v2 = None
    for epoch in range(1, cfg.epochs + 1):
        if S1 is None or cfg.resample_each_epoch:
            v1 = sample_augmented(g, deltas[0], rng)
            v2 = sample_augmented(g, deltas[1], rng)
            S1 = diffusion_matrix(v1, self_loops)
            S2 = diffusion_matrix(v2, self_loops)
        perm = rng.permutation(g.n)
        parts = []
        for start in range(0, g.n, cfg.batch):
            anchors = perm[start:start + cfg.batch]
            emb = forward_pair(v1, v2, weights, S1=S1, S2=S2)
            negatives = sample_negatives(anchors, rng) if anchors.size >= 2 else None
            br, dH1, dH2 = total_loss(emb.H1, emb.H2, anchors, loss_cfg, negatives=negatives)
            if not np.isfinite(br.total):
                raise TrainingError(f"non-finite loss at epoch {epoch}: {br}")
            grads = backward_pair(emb.tape, dH1, dH2)
            try:
                adam_step(weights.W, grads, state, cfg.lr, cfg.weight_decay)
            except TrainingError as exc:
                raise TrainingError(f"epoch {epoch}: {exc} (loss {br})") from exc
            parts.append(br)
        epoch_br = LossBreakdown.of(
            float(np.mean([p.infonce for p in parts])),
            float(np.mean([p.lower for p in parts])),
            float(np.mean([p.upper for p in parts])),
        )
        result.log.append(epoch_br)
        if progress is not None:
            progress(epoch, epoch_br)
    return result


def write_training_log(log_rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "infonce", "lower", "upper", "total"])
        for epoch, br in enumerate(log_rows, start=1):
            w.writerow([epoch, repr(br.infonce), repr(br.lower), repr(br.upper), repr(br.total)])


def read_training_log(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [LossBreakdown(float(r["infonce"]), float(r["lower"]), float(r["upper"]), float(r["total"]))
            for r in rows]


def save_checkpoint(path, weights: EncoderWeights, state: AdamState, cfg: TrainConfig,
                    extra: dict | None = None) -> None:
    """Binary layout: magic, u32 version, u32 header length, JSON header,
    then float64 little-endian arrays (weights, first moments, second moments)."""
    header = {
        "artifact_version": __version__,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "k": weights.k,
        "shapes": [list(w.shape) for w in weights.W],
        "adam": {"step": state.step, "beta1": state.beta1, "beta2": state.beta2, "eps": state.eps},
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for arr in [*weights.W, *state.m, *state.v]:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (weights, adam_state, config, header)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic)")
    off = len(CHECKPOINT_MAGIC)
    version, hlen = struct.unpack_from("<II", raw, off)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off += 8
    header = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen
    shapes = [tuple(s) for s in header["shapes"]]

    def take(shape):
        nonlocal off
        count = int(np.prod(shape))
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape).astype(np.float64)
        off += 8 * count
        return arr

    W = [take(s) for s in shapes]
    m = [take(s) for s in shapes]
    v = [take(s) for s in shapes]
    if off != len(raw):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    a = header["adam"]
    state = AdamState(m, v, a["step"], a["beta1"], a["beta2"], a["eps"])
    cfg = TrainConfig(**header["config"])
    return EncoderWeights(W, header["k"]), state, cfg, header
