"""Dataset files and synthetic stochastic block model graphs.

File formats:

* edge list: UTF-8 text, one whitespace-separated ``i j`` pair per line,
  0-based, undirected (mirrored and deduplicated on load). Blank lines and
  lines starting with ``#`` are skipped.
* features: CSV of reals (n rows, d columns), or raw binary: an 8-byte
  header of two little-endian uint32 (n, d) followed by n*d little-endian
  float32 values in row-major order. Binary is selected by a ``.bin``
  suffix.
* labels: text, one integer per line.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError, build_graph

log = logging.getLogger(__name__)


class DataError(ValueError):
    pass


def read_edge_list(path) -> np.ndarray:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'i j', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer node index in {line!r}") from None
            if i < 0 or j < 0:
                raise DataError(f"{path}:{lineno}: negative node index")
            if i != j:
                pairs.append((i, j))
            else:
                log.warning("%s:%d: dropping self-loop %d", path, lineno, i)
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, j in g.edge_list():
            fh.write(f"{i} {j}\n")


def read_features(path) -> np.ndarray:
    path = Path(path)
    if path.suffix == ".bin":
        raw = path.read_bytes()
        if len(raw) < 8:
            raise DataError(f"{path}: truncated header")
        n, d = struct.unpack_from("<II", raw, 0)
        expected = 8 + 4 * n * d
        if len(raw) != expected:
            raise DataError(f"{path}: expected {expected} bytes for ({n}, {d}), got {len(raw)}")
        return np.frombuffer(raw, dtype="<f4", offset=8).reshape(n, d).astype(np.float64)
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise DataError(f"{path}:{lineno}: malformed feature row") from None
            if len(rows[-1]) != len(rows[0]):
                raise DataError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(rows[-1])}")
    return np.asarray(rows, dtype=np.float64)


def write_features(X: np.ndarray, path) -> None:
    X = np.asarray(X)
    path = Path(path)
    if path.suffix == ".bin":
        with open(path, "wb") as fh:
            fh.write(struct.pack("<II", *X.shape))
            fh.write(np.ascontiguousarray(X, dtype="<f4").tobytes())
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in X:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_labels(path) -> np.ndarray:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise DataError(f"{path}:{lineno}: label is not an integer: {line!r}") from None
    y = np.asarray(out, dtype=np.int64)
    classes = np.unique(y)
    if len(classes) and not np.array_equal(classes, np.arange(len(classes))):
        log.warning("%s: labels %s are not contiguous from 0; remapping", path, classes.tolist())
        y = np.searchsorted(classes, y)
    return y


def write_labels(y: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in y:
            fh.write(f"{int(v)}\n")


@dataclass(frozen=True)
class SBMParams:
    n: int = 300
    blocks: int = 3
    p_in: float = 0.1
    p_out: float = 0.01
    feature_noise: float = 0.5


@dataclass(frozen=True)
class DatasetSpec:
    """Either a file triple (edges, features, labels) or SBM parameters."""

    name: str = "sbm"
    edges: str | None = None
    features: str | None = None
    labels: str | None = None
    sbm: SBMParams | None = None

    def __post_init__(self):
        has_files = self.edges is not None or self.features is not None
        if has_files == (self.sbm is not None):
            raise ValueError("dataset needs exactly one of: file paths, sbm parameters")
        if has_files and (self.edges is None or self.features is None):
            raise ValueError("file datasets need both 'edges' and 'features'")

    def to_dict(self) -> dict:
        d = {"name": self.name}
        if self.sbm is not None:
            d["sbm"] = dict(vars(self.sbm))
        else:
            d.update(edges=self.edges, features=self.features, labels=self.labels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> DatasetSpec:
        d = dict(d)
        if "sbm" in d and d["sbm"] is not None:
            d["sbm"] = SBMParams(**d["sbm"])
        return cls(**d)


def load_dataset(spec: DatasetSpec, seed: int = 0) -> Graph:
    """Load a file dataset, or generate the SBM described by ``spec``."""
    if spec.sbm is not None:
        p = spec.sbm
        return generate_sbm(p.n, p.blocks, p.p_in, p.p_out, p.feature_noise, seed)
    for path in (spec.edges, spec.features, spec.labels):
        if path is not None and not Path(path).exists():
            raise DataError(f"missing dataset file: {path}")
    X = read_features(spec.features)
    pairs = read_edge_list(spec.edges)
    y = read_labels(spec.labels) if spec.labels else None
    if y is not None and len(y) != X.shape[0]:
        raise DataError(f"label count {len(y)} != feature rows {X.shape[0]}")
    if len(pairs) and pairs.max() >= X.shape[0]:
        raise DataError(f"edge list references node {pairs.max()} but there are {X.shape[0]} feature rows")
    try:
        return build_graph(pairs, X, y)
    except GraphError as exc:
        raise DataError(str(exc)) from exc


def save_dataset(g: Graph, edges, features, labels=None) -> None:
    write_edge_list(g, edges)
    write_features(g.features, features)
    if labels is not None and g.labels is not None:
        write_labels(g.labels, labels)


def block_assignment(n: int, blocks: int) -> np.ndarray:
    """Contiguous blocks; the first n % blocks blocks get one extra node."""
    sizes = np.full(blocks, n // blocks)
    sizes[: n % blocks] += 1
    return np.repeat(np.arange(blocks), sizes)


def generate_sbm(n: int, blocks: int, p_in: float, p_out: float,
                 feature_noise: float = 0.5, seed=0) -> Graph:
    """Planted-partition graph with one-hot block features plus uniform noise."""
    if not (0 <= p_out <= p_in <= 1):
        raise ValueError(f"need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if blocks < 1 or n < blocks:
        raise ValueError("need 1 <= blocks <= n")
    if feature_noise < 0:
        raise ValueError("feature_noise must be non-negative")
    rng = np.random.default_rng(seed)
    y = block_assignment(n, blocks)
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(y[iu] == y[ju], p_in, p_out)
    hit = rng.random(len(iu)) < prob
    A = np.zeros((n, n))
    A[iu[hit], ju[hit]] = 1.0
    A[ju[hit], iu[hit]] = 1.0
    X = np.eye(blocks)[y] + rng.uniform(-feature_noise, feature_noise, size=(n, blocks))
    return Graph(A, X, y, {"name": "sbm"})
