"""Datasets: the plain-text directory format and synthetic generators.

A dataset directory holds four files::

    graph.txt     "n m", then m lines "u v" (each undirected edge once)
    features.txt  "n d", then n lines of d whitespace-separated numbers
    labels.txt    n lines, one integer class id each
    splits.txt    three lines: train, val and test node ids (space-separated)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import DatasetError
from .graph import SparseGraph, build_graph, neighbor_union

FILES = ("graph.txt", "features.txt", "labels.txt", "splits.txt")


@dataclass
class Dataset:
    graph: SparseGraph
    features: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    name: str = "dataset"

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    def validate(self) -> None:
        n = self.num_nodes
        if self.features.shape[0] != n:
            raise DatasetError(f"{self.features.shape[0]} feature rows for {n} nodes")
        if self.labels.shape != (n,):
            raise DatasetError(f"{self.labels.size} labels for {n} nodes")
        if self.labels.size and self.labels.min() < 0:
            raise DatasetError("negative label")
        seen = np.zeros(n, dtype=bool)
        for name in ("train", "val", "test"):
            idx = getattr(self, name)
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise DatasetError(f"{name} split index out of range")
            if np.unique(idx).size != idx.size or seen[idx].any():
                raise DatasetError(f"{name} split overlaps another split or itself")
            seen[idx] = True


def _fmt(x: float) -> str:
    return repr(float(x))


def write_dataset(ds: Dataset, path) -> Path:
    """Write the canonical form: sorted edges ``u < v``, shortest round-trip floats."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    edges = ds.graph.edge_list()
    lines = [f"{ds.num_nodes} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    (path / "graph.txt").write_text("\n".join(lines) + "\n")
    n, d = ds.features.shape
    rows = [" ".join(_fmt(x) for x in row) for row in ds.features]
    (path / "features.txt").write_text("\n".join([f"{n} {d}"] + rows) + "\n")
    (path / "labels.txt").write_text("".join(f"{int(y)}\n" for y in ds.labels))
    splits = [" ".join(str(int(i)) for i in idx) for idx in (ds.train, ds.val, ds.test)]
    (path / "splits.txt").write_text("\n".join(splits) + "\n")
    return path


def _header(tokens, path, expected=2):
    if len(tokens) != expected:
        raise DatasetError(f"header must have {expected} integers, got {len(tokens)}", path, 1)
    try:
        vals = [int(t) for t in tokens]
    except ValueError:
        raise DatasetError(f"non-integer header {' '.join(tokens)!r}", path, 1) from None
    if min(vals) < 0:
        raise DatasetError("negative size in header", path, 1)
    return vals


def _ints(tokens, path, line):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise DatasetError(f"expected integers, got {' '.join(tokens)!r}", path, line) from None


def load_dataset(path, normalize_features: bool = True) -> Dataset:
    """Read and validate a dataset directory.

    With ``normalize_features`` each feature row is scaled to unit L1
    norm (all-zero rows stay zero).
    """
    path = Path(path)
    for name in FILES:
        if not (path / name).is_file():
            raise DatasetError(f"missing {name}", path / name)

    gfile = path / "graph.txt"
    glines = gfile.read_text().splitlines()
    if not glines:
        raise DatasetError("empty file", gfile)
    n, m = _header(glines[0].split(), gfile)
    body = [ln for ln in glines[1:]]
    if len(body) != m:
        raise DatasetError(f"header says {m} edges, found {len(body)} lines", gfile)
    edges = np.empty((m, 2), dtype=np.int64)
    for k, ln in enumerate(body):
        toks = ln.split()
        if len(toks) != 2:
            raise DatasetError("edge line must be 'u v'", gfile, k + 2)
        u, v = _ints(toks, gfile, k + 2)
        if not (0 <= u < n and 0 <= v < n):
            raise DatasetError(f"edge ({u}, {v}) outside [0, {n})", gfile, k + 2)
        edges[k] = u, v
    graph = build_graph(edges, n)

    ffile = path / "features.txt"
    flines = ffile.read_text().splitlines()
    if not flines:
        raise DatasetError("empty file", ffile)
    fn, d = _header(flines[0].split(), ffile)
    if fn != n:
        raise DatasetError(f"{fn} feature rows declared for {n} nodes", ffile, 1)
    if len(flines) - 1 != n:
        raise DatasetError(f"expected {n} feature rows, found {len(flines) - 1}", ffile)
    features = np.empty((n, d))
    for i, ln in enumerate(flines[1:]):
        toks = ln.split()
        if len(toks) != d:
            raise DatasetError(f"expected {d} values, got {len(toks)}", ffile, i + 2)
        try:
            features[i] = [float(t) for t in toks]
        except ValueError:
            raise DatasetError("non-numeric feature", ffile, i + 2) from None

    lfile = path / "labels.txt"
    llines = lfile.read_text().splitlines()
    if len(llines) != n:
        raise DatasetError(f"expected {n} labels, found {len(llines)}", lfile)
    labels = np.empty(n, dtype=np.int64)
    for i, ln in enumerate(llines):
        toks = ln.split()
        if len(toks) != 1:
            raise DatasetError("expected one label per line", lfile, i + 1)
        (labels[i],) = _ints(toks, lfile, i + 1)
        if labels[i] < 0:
            raise DatasetError(f"negative label {labels[i]}", lfile, i + 1)

    sfile = path / "splits.txt"
    slines = sfile.read_text().split("\n")
    if slines and slines[-1] == "":
        slines = slines[:-1]
    if len(slines) != 3:
        raise DatasetError(f"expected 3 split lines, found {len(slines)}", sfile)
    seen = {}
    splits = []
    for k, ln in enumerate(slines):
        idx = np.array(_ints(ln.split(), sfile, k + 1), dtype=np.int64)
        bad = idx[(idx < 0) | (idx >= n)]
        if bad.size:
            raise DatasetError(f"split index {bad[0]} outside [0, {n})", sfile, k + 1)
        for i in idx.tolist():
            if i in seen:
                raise DatasetError(f"node {i} appears in split line {seen[i]} and {k + 1}",
                                   sfile, k + 1)
            seen[i] = k + 1
        splits.append(idx)

    if normalize_features:
        features = l1_normalize_rows(features)
    ds = Dataset(graph, features, labels, *splits, name=path.name)
    ds.validate()
    return ds


def l1_normalize_rows(x: np.ndarray) -> np.ndarray:
    s = np.abs(x).sum(axis=1, keepdims=True)
    return np.divide(x, s, out=np.array(x, dtype=np.float64), where=s != 0)


@dataclass
class SyntheticSpec:
    """Recipe for a synthetic dataset.

    ``kind`` is one of ``er``, ``sbm``, ``star``, ``path``, ``grid``.
    ``n`` is the node count (leaves + 1 for a star, rows * cols for a grid).
    SBM labels are block ids; other graphs get uniformly random labels
    over ``num_classes`` unless ``label_rule == "degree"``, which buckets
    nodes by degree quantile.
    """

    kind: str = "er"
    n: int = 100
    p: float = 0.03
    blocks: int = 2
    p_in: float = 0.2
    p_out: float = 0.01
    rows: int = 0
    cols: int = 0
    num_classes: int = 2
    features: str = "gaussian"
    feature_dim: int = 16
    noise: float = 1.0
    label_rule: str = "random"
    split: tuple = (0.6, 0.2, 0.2)
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.kind not in ("er", "sbm", "star", "path", "grid"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        for name in ("p", "p_in", "p_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} is not a probability")
        if self.n < 1 or self.num_classes < 1 or self.feature_dim < 1 or self.blocks < 1:
            raise ValueError("sizes must be positive")
        if self.features not in ("gaussian", "onehot"):
            raise ValueError(f"unknown feature generator {self.features!r}")
        if len(self.split) != 3 or min(self.split) < 0 or sum(self.split) > 1 + 1e-12:
            raise ValueError(f"bad split fractions {self.split}")


def _random_pairs(n, p, rng, block=None, p_in=None, p_out=None):
    iu, ju = np.triu_indices(n, k=1)
    if block is None:
        prob = p
    else:
        prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(iu.size) < prob
    return np.column_stack([iu[keep], ju[keep]])


def generate(spec: SyntheticSpec, rng: np.random.Generator | None = None) -> Dataset:
    """Build a synthetic dataset; deterministic given ``spec.seed`` (or ``rng``)."""
    spec.validate()
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    n = spec.n
    labels = None
    if spec.kind == "er":
        edges = _random_pairs(n, spec.p, rng)
    elif spec.kind == "sbm":
        labels = np.arange(n) * spec.blocks // n
        edges = _random_pairs(n, None, rng, labels, spec.p_in, spec.p_out)
    elif spec.kind == "star":
        edges = np.column_stack([np.zeros(n - 1, dtype=np.int64), np.arange(1, n)])
    elif spec.kind == "path":
        edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    else:
        r, c = (spec.rows, spec.cols) if spec.rows and spec.cols else (n, 1)
        n = r * c
        ids = np.arange(n).reshape(r, c)
        edges = np.concatenate([
            np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()]),
            np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()]),
        ])
    graph = build_graph(edges, n)

    if labels is None:
        if spec.label_rule == "degree":
            deg = graph.degrees()
            cuts = np.quantile(deg, np.linspace(0, 1, spec.num_classes + 1)[1:-1])
            labels = np.searchsorted(cuts, deg, side="right")
        else:
            labels = rng.integers(spec.num_classes, size=n)
    labels = labels.astype(np.int64)
    k = int(labels.max()) + 1

    if spec.features == "onehot":
        x = np.eye(n)
    else:
        means = rng.normal(size=(k, spec.feature_dim))
        x = means[labels] + spec.noise * rng.normal(size=(n, spec.feature_dim))

    perm = rng.permutation(n)
    n_tr = int(round(spec.split[0] * n))
    n_va = int(round(spec.split[1] * n))
    n_te = min(int(round(spec.split[2] * n)), n - n_tr - n_va)
    train = np.sort(perm[:n_tr])
    val = np.sort(perm[n_tr:n_tr + n_va])
    test = np.sort(perm[n_tr + n_va:n_tr + n_va + n_te])
    ds = Dataset(graph, x, labels, train, val, test, name=f"{spec.kind}-{n}")
    ds.validate()
    return ds


def parse_spec_file(path) -> SyntheticSpec:
    """Read ``key=value`` lines (``#`` comments allowed) into a :class:`SyntheticSpec`."""
    return spec_from_mapping(read_spec_mapping(path))


def read_spec_mapping(path) -> dict:
    kv = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DatasetError("expected key=value", path, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key.replace("-", "_")] = value
    return kv


def spec_from_mapping(kv) -> SyntheticSpec:
    spec = SyntheticSpec()
    for key, value in kv.items():
        if not hasattr(spec, key) or key == "extra":
            raise ValueError(f"unknown generator option {key!r}")
        current = getattr(spec, key)
        if isinstance(current, tuple):
            value = tuple(float(v) for v in str(value).replace(",", " ").split())
        elif isinstance(current, bool):
            value = str(value).lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        setattr(spec, key, value)
    spec.validate()
    return spec


@dataclass
class DegreeStats:
    average_degree: float
    max_degree: int
    v_bar: float


def expected_union_size(g: SparseGraph, b: int) -> float:
    """Exact ``V_bar(b) = E|N[Q]|`` for ``Q`` a uniform ``b``-subset of all nodes.

    Node ``j`` is missed only when ``Q`` avoids its closed neighborhood,
    which has hypergeometric probability ``C(n - d_j, b) / C(n, b)``.
    """
    closed = g.degrees() + 1
    return float(np.sum(1.0 - avoid_probability(g.num_nodes, closed, b)))


def avoid_probability(n: int, k, b: int) -> np.ndarray:
    """``C(n-k, b) / C(n, b)``: chance a uniform ``b``-subset of ``n`` misses ``k`` fixed items."""
    k = np.asarray(k, dtype=np.float64)
    out = np.zeros_like(k)
    ok = n - k >= b
    m = k[ok]
    out[ok] = np.exp(gammaln(n - m + 1) - gammaln(n - m - b + 1)
                     - gammaln(n + 1) + gammaln(n - b + 1))
    return out


def degree_stats(g: SparseGraph, b: int | None = None, trials: int = 0,
                 rng: np.random.Generator | None = None) -> DegreeStats:
    """Average/max degree and ``V_bar(b)``.

    With ``trials > 0`` ``V_bar`` is the Monte-Carlo mean of
    ``|neighbor_union|`` over that many uniform batches; otherwise the exact
    hypergeometric expectation. ``b=None`` reports ``nan`` for ``V_bar``.
    """
    deg = g.degrees()
    avg = float(deg.mean()) if deg.size else 0.0
    mx = int(deg.max()) if deg.size else 0
    if b is None:
        vbar = float("nan")
    elif trials > 0:
        rng = np.random.default_rng() if rng is None else rng
        sizes = [neighbor_union(g, rng.choice(g.num_nodes, size=b, replace=False)).size
                 for _ in range(trials)]
        vbar = float(np.mean(sizes))
    else:
        vbar = expected_union_size(g, b)
    return DegreeStats(avg, mx, vbar)
