"""Computation-graph samplers.

Every sampler returns a :class:`BatchPlan`: one :class:`LayerPlan` per GCN
layer, top (output) layer first. ``layers[k].p_tilde`` is the sampled
propagation block mapping activations of ``layers[k].lower_nodes`` to
pre-activations of ``layers[k].upper_nodes``.

Samplers are pure functions of their inputs and the ``numpy`` Generator
passed in.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import CorruptLaplacianError
from .graph import (Laplacian, SparseGraph, _check_rows, csr_from_arrays, gather_rows,
                    restrict_columns, select_rows)

SCHEMES = ("ladies", "fastgcn", "neighbor", "full")


@dataclass(frozen=True)
class SketchDiag:
    """Nonzero diagonal of a sketch matrix ``S``.

    ``weights[k]`` is the summed ``1/(s p_i)`` of every draw that hit
    ``support[k]``; nodes kept deterministically carry weight 1.
    """

    support: np.ndarray
    weights: np.ndarray

    def dense(self, n: int) -> np.ndarray:
        d = np.zeros(n)
        d[self.support] = self.weights
        return d


@dataclass
class LayerPlan:
    layer_index: int
    upper_nodes: np.ndarray
    lower_nodes: np.ndarray
    p_tilde: sp.csr_matrix
    probs: np.ndarray | None = None
    sketch: SketchDiag | None = None
    candidates: np.ndarray | None = None
    zero_rows: np.ndarray = field(default=None)
    num_draws: int = 0

    def __post_init__(self):
        if self.zero_rows is None:
            self.zero_rows = zero_rows(self.p_tilde)

    @property
    def shape(self) -> tuple[int, int]:
        return self.p_tilde.shape


@dataclass
class BatchPlan:
    scheme: str
    layers: list[LayerPlan]
    input_nodes: np.ndarray
    batch_nodes: np.ndarray

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def layer_sizes(self) -> list[int]:
        """Row counts from the input layer up to the output layer."""
        return [self.input_nodes.size] + [lp.upper_nodes.size for lp in reversed(self.layers)]

    def zero_row_count(self) -> int:
        return int(sum(lp.zero_rows.sum() for lp in self.layers))

    def check_chain(self) -> None:
        for upper, lower in zip(self.layers, self.layers[1:]):
            if not np.array_equal(upper.lower_nodes, lower.upper_nodes):
                raise AssertionError(
                    f"layer {upper.layer_index} lower nodes do not feed layer {lower.layer_index}")
        if self.layers and not np.array_equal(self.layers[-1].lower_nodes, self.input_nodes):
            raise AssertionError("bottom layer does not consume input_nodes")
        if self.layers and not np.array_equal(self.layers[0].upper_nodes, self.batch_nodes):
            raise AssertionError("top layer does not emit batch_nodes")


def zero_rows(m) -> np.ndarray:
    """Boolean mask of rows whose entries are all zero."""
    if sp.issparse(m):
        m = m.tocsr()
        rows = np.repeat(np.arange(m.shape[0]), np.diff(m.indptr))
        return np.bincount(rows, weights=np.abs(m.data), minlength=m.shape[0]) == 0
    return ~np.any(np.asarray(m) != 0, axis=1)


def row_normalize(m):
    """Divide each row by its sum; rows summing to zero are left untouched.

    Works on dense arrays and scipy sparse matrices, returning the same kind.
    """
    if sp.issparse(m):
        m = m.tocsr()
        lens = np.diff(m.indptr)
        data = np.asarray(m.data, dtype=np.float64)
        sums = np.bincount(np.repeat(np.arange(m.shape[0]), lens), weights=data,
                           minlength=m.shape[0])
        scale = np.divide(1.0, sums, out=np.ones_like(sums), where=sums != 0)
        return csr_from_arrays(m.indptr, m.indices, data * np.repeat(scale, lens), m.shape)
    m = np.array(m, dtype=np.float64)
    sums = m.sum(axis=1, keepdims=True)
    np.divide(m, sums, out=m, where=sums != 0)
    return m


def sample_batch(train_nodes, b: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``min(b, |train|)`` output nodes uniformly without replacement."""
    train_nodes = np.asarray(train_nodes, dtype=np.int64)
    b = min(int(b), train_nodes.size)
    return np.sort(rng.choice(train_nodes, size=b, replace=False))


def _importance_draw(probs, candidates, s, rng, replace):
    """Draw ``s`` candidates from ``probs``; return (distinct nodes, weights, draws)."""
    p = probs[candidates]
    if replace:
        cdf = np.cumsum(p)
        picks = np.searchsorted(cdf, rng.random(s) * cdf[-1], side="right")
        np.minimum(picks, candidates.size - 1, out=picks)
        counts = np.bincount(picks, minlength=candidates.size)
        hit = np.flatnonzero(counts)
        return candidates[hit], counts[hit] / (s * p[hit]), s
    s_eff = min(s, int(np.count_nonzero(p)))
    picks = np.sort(rng.choice(candidates.size, size=s_eff, replace=False, p=p))
    return candidates[picks], 1.0 / (s_eff * p[picks]), s_eff


def _sketched_block(p: Laplacian, rows, nodes: np.ndarray, weights: np.ndarray) -> sp.csr_matrix:
    """``Q P S`` restricted to the columns ``nodes`` (``rows`` = gathered ``QP``)."""
    indptr, indices, data = restrict_columns(*rows, nodes, weights, p.num_nodes)
    return csr_from_arrays(indptr, indices, data, (rows[0].size - 1, nodes.size))


def _check_args(n, batch, s, num_layers, name):
    batch = _check_rows(n, batch)
    if batch.size == 0:
        raise ValueError("batch must be nonempty")
    if int(s) < 1:
        raise ValueError(f"{name} must be >= 1, got {s}")
    if int(num_layers) < 1:
        raise ValueError(f"num_layers must be >= 1, got {num_layers}")
    return batch


def ladies_sample(p: Laplacian, g: SparseGraph, batch, s_layer: int, num_layers: int,
                  rng: np.random.Generator, *, normalize: bool = True,
                  replace: bool = True, keep_upper: bool = True) -> BatchPlan:
    """Layer-dependent importance sampling, top layer down.

    At each layer the candidate set is the closed neighborhood of the
    nodes already chosen above, and node ``i`` is drawn with probability
    proportional to the squared norm of column ``i`` of ``Q P``.

    Args:
        p: normalized Laplacian.
        g: the graph ``p`` was built from.
        batch: output-layer node ids.
        s_layer: draws per layer.
        num_layers: number of GCN layers ``L``.
        rng: random stream.
        normalize: row-normalize each sampled block.
        replace: i.i.d. draws (unbiased). ``False`` draws without
            replacement but keeps the ``1/(s p)`` weights, which is biased.
        keep_upper: also keep every upper-layer node in the layer below,
            at sketch weight 1 (its expected weight). Guarantees that no row
            of any sampled block is empty while keeping ``E[S] = L``; costs
            layer widths that grow with depth. ``False`` is the plain
            draw-only construction.
    """
    batch = _check_args(p.num_nodes, batch, s_layer, num_layers, "s_layer")
    s_layer = int(s_layer)
    upper = batch
    layers = []
    for l in range(int(num_layers), 0, -1):
        rows = gather_rows(p, upper)
        col_sq = np.bincount(rows[1], weights=rows[2] ** 2, minlength=p.num_nodes)
        frob = col_sq.sum()
        if not frob > 0:
            raise CorruptLaplacianError(f"||QP||_F^2 == 0 at layer {l}")
        probs = col_sq / frob
        # every stored entry of P is positive, so the support is N[upper]
        candidates = np.flatnonzero(col_sq)
        nodes, weights, draws = _importance_draw(probs, candidates, s_layer, rng, replace)
        if keep_upper:
            merged = np.union1d(nodes, upper)
            w = np.zeros(merged.size)
            w[np.searchsorted(merged, nodes)] = weights
            w[np.searchsorted(merged, np.unique(upper))] = 1.0
            nodes, weights = merged, w
        block = _sketched_block(p, rows, nodes, weights)
        if normalize:
            block = row_normalize(block)
        layers.append(LayerPlan(l, upper, nodes, block, probs=probs,
                                sketch=SketchDiag(nodes, weights),
                                candidates=candidates, num_draws=draws))
        upper = nodes
    return BatchPlan("ladies", layers, upper, batch)


def fastgcn_probs(p: Laplacian) -> np.ndarray:
    """Layer-independent law ``q_j = ||P_{*,j}||^2 / ||P||_F^2``."""
    return p.col_sq_norms / p.frob_sq


def fastgcn_sample(p: Laplacian, batch, s_layer: int, num_layers: int,
                   rng: np.random.Generator, *, normalize: bool = False,
                   replace: bool = True) -> BatchPlan:
    """Independent layer-wise importance sampling over all nodes.

    Draws at different layers ignore each other, so rows of ``p_tilde``
    can be empty on sparse graphs.
    """
    batch = _check_args(p.num_nodes, batch, s_layer, num_layers, "s_layer")
    s_layer = int(s_layer)
    probs = fastgcn_probs(p)
    everyone = np.flatnonzero(probs > 0)
    upper = batch
    layers = []
    for l in range(int(num_layers), 0, -1):
        rows = gather_rows(p, upper)
        nodes, weights, draws = _importance_draw(probs, everyone, s_layer, rng, replace)
        block = _sketched_block(p, rows, nodes, weights)
        if normalize:
            block = row_normalize(block)
        layers.append(LayerPlan(l, upper, nodes, block, probs=probs,
                                sketch=SketchDiag(nodes, weights), num_draws=draws))
        upper = nodes
    return BatchPlan("fastgcn", layers, upper, batch)


def _neighbor_block(qp, s_node: int, rng, replace):
    """Scaled sampled rows ``P_hat`` for every row of ``qp`` (raw CSR arrays, global columns)."""
    indptr, indices, data = qp
    r = indptr.size - 1
    deg = np.diff(indptr)
    rowid = np.repeat(np.arange(r), deg)
    pieces_r, pieces_c, pieces_v = [], [], []

    if replace:
        mult = np.zeros(r, dtype=bool)
    else:
        mult = deg > s_node
        # whole neighborhood fits: exact row
        full = np.repeat(~mult, deg)
        pieces_r.append(rowid[full])
        pieces_c.append(indices[full])
        pieces_v.append(data[full])
        # subsample s_node of deg without replacement: smallest random keys
        sub = np.repeat(mult, deg)
        if sub.any():
            keys = rng.random(int(sub.sum()))
            rows_s = rowid[sub]
            pos = np.flatnonzero(sub)
            order = np.lexsort((keys, rows_s))
            pos, rows_s = pos[order], rows_s[order]
            first = np.searchsorted(rows_s, rows_s, side="left")
            take = (np.arange(rows_s.size) - first) < s_node
            pos, rows_s = pos[take], rows_s[take]
            pieces_r.append(rows_s)
            pieces_c.append(indices[pos])
            pieces_v.append(data[pos] * (deg[rows_s] / s_node))

    rep_rows = np.flatnonzero(~mult) if replace else np.empty(0, dtype=np.int64)
    if rep_rows.size:
        offs = np.floor(rng.random((rep_rows.size, s_node)) * deg[rep_rows, None]).astype(np.int64)
        pos = (indptr[rep_rows, None] + offs).ravel()
        rows_r = np.repeat(rep_rows, s_node)
        pieces_r.append(rows_r)
        pieces_c.append(indices[pos])
        pieces_v.append(data[pos] * (deg[rows_r] / s_node))

    rows = np.concatenate(pieces_r)
    cols = np.concatenate(pieces_c)
    vals = np.concatenate(pieces_v)
    return rows, cols, vals


def neighbor_sample(p: Laplacian, g: SparseGraph, batch, s_node: int, num_layers: int,
                    rng: np.random.Generator, *, normalize: bool = False,
                    replace: bool = False) -> BatchPlan:
    """Node-wise uniform neighbor sampling (GraphSAGE style).

    Each upper node keeps ``s_node`` of its closed neighbors, scaled by
    ``|N(v)|/s_node``. When the neighborhood has at most ``s_node`` members
    it is kept whole (exact row). ``replace=True`` instead draws ``s_node``
    neighbors with replacement for every node, the law the closed-form
    variance assumes.
    """
    batch = _check_args(p.num_nodes, batch, s_node, num_layers, "s_node")
    s_node = int(s_node)
    upper = batch
    layers = []
    for l in range(int(num_layers), 0, -1):
        qp = gather_rows(p, upper)
        rows, cols, vals = _neighbor_block(qp, s_node, rng, replace)
        nodes = np.unique(cols)
        # merge repeated (row, col) draws into one sorted CSR entry
        key, inv = np.unique(rows * nodes.size + np.searchsorted(nodes, cols),
                             return_inverse=True)
        merged = np.bincount(inv.ravel(), weights=vals, minlength=key.size)
        r, c = np.divmod(key, nodes.size)
        indptr = np.zeros(upper.size + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=upper.size), out=indptr[1:])
        block = csr_from_arrays(indptr, c, merged, (upper.size, nodes.size))
        if normalize:
            block = row_normalize(block)
        layers.append(LayerPlan(l, upper, nodes, block, candidates=np.union1d(upper, qp[1]),
                                num_draws=int(rows.size)))
        upper = nodes
    return BatchPlan("neighbor", layers, upper, batch)


def full_batch_plan(p: Laplacian, num_layers: int, batch=None) -> BatchPlan:
    """Exact propagation: every layer uses all of ``P``.

    With ``batch`` given, only the output layer is restricted to those rows.
    """
    if int(num_layers) < 1:
        raise ValueError(f"num_layers must be >= 1, got {num_layers}")
    n = p.num_nodes
    everyone = np.arange(n)
    top = everyone if batch is None else np.asarray(batch, dtype=np.int64).ravel()
    layers = []
    for l in range(int(num_layers), 0, -1):
        upper = top if l == num_layers else everyone
        block = p.matrix if upper is everyone else select_rows(p, upper)
        layers.append(LayerPlan(l, upper, everyone, block,
                                zero_rows=np.zeros(upper.size, dtype=bool)))
    return BatchPlan("full", layers, everyone, top)


@dataclass(frozen=True)
class SamplerConfig:
    """Which sampler to run and its knobs.

    ``normalize`` and ``replace`` default per scheme when left as ``None``:
    row normalization is on for LADIES only, and draws are with
    replacement for the layer-wise schemes and without for neighbor
    sampling.
    """

    kind: str = "ladies"
    s_layer: int = 64
    s_node: int = 5
    normalize: bool | None = None
    keep_upper: bool = True
    replace: bool | None = None

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown sampler {self.kind!r}; choose from {SCHEMES}")
        if self.s_layer < 1 or self.s_node < 1:
            raise ValueError("sample sizes must be >= 1")

    @property
    def label(self) -> str:
        if self.kind == "full":
            return "Full-Batch"
        if self.kind == "neighbor":
            return f"GraphSage ({self.s_node})"
        name = "LADIES" if self.kind == "ladies" else "FastGCN"
        return f"{name} ({self.s_layer})"

    def plan(self, p: Laplacian, g: SparseGraph, batch, num_layers: int,
             rng: np.random.Generator) -> BatchPlan:
        kw = {}
        if self.normalize is not None:
            kw["normalize"] = self.normalize
        if self.replace is not None:
            kw["replace"] = self.replace
        if self.kind == "ladies":
            return ladies_sample(p, g, batch, self.s_layer, num_layers, rng,
                                 keep_upper=self.keep_upper, **kw)
        if self.kind == "fastgcn":
            return fastgcn_sample(p, batch, self.s_layer, num_layers, rng, **kw)
        if self.kind == "neighbor":
            return neighbor_sample(p, g, batch, self.s_node, num_layers, rng, **kw)
        plan = full_batch_plan(p, num_layers, batch)
        if self.normalize:
            for lp in plan.layers:
                lp.p_tilde = row_normalize(lp.p_tilde)
        return plan
