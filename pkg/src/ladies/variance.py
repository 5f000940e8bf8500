"""Closed-form variances, a Monte-Carlo variance oracle, and complexity counts.

All variances are per output node: ``E||Z_tilde - Q Z||_F^2 / b`` for a
single layer ``Z = P H W``. Closed forms that average over a uniformly
drawn batch say so; the ``*_exact_form`` helpers condition on a fixed one.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from .data import avoid_probability, expected_union_size
from .graph import Laplacian, SparseGraph, neighbor_union
from .samplers import BatchPlan, SamplerConfig, fastgcn_probs


# -- sketched matrix products ----------------------------------------------

def optimal_probs(a) -> np.ndarray:
    """Column-norm law ``p_k = ||A_{*,k}||^2 / ||A||_F^2``."""
    a = np.asarray(a, dtype=np.float64)
    col = np.sum(a * a, axis=0)
    return col / col.sum()


def lemma1_closed_form(a, b, probs, s: int) -> float:
    """``E||A S B - A B||_F^2 = (||A||_F^2 ||B||_F^2 - ||AB||_F^2) / s``.

    Only valid when ``probs`` is the column-norm law of ``a``; anything
    else raises ``ValueError``. Rows of ``B`` facing an all-zero column of
    ``A`` are never sampled and drop out of ``||B||_F^2``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if int(s) < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (a.shape[1],) or not np.allclose(probs, optimal_probs(a), rtol=0, atol=1e-9):
        raise ValueError("probs must equal the squared column-norm law of A")
    ab = a @ b
    live = b[probs > 0]
    return float((np.sum(a * a) * np.sum(live * live) - np.sum(ab * ab)) / s)


def sketch_product(a, b, probs, picks) -> np.ndarray:
    """``A S B`` for one sketch given its ``s`` drawn column indices."""
    picks = np.asarray(picks)
    s = picks.size
    scale = 1.0 / (s * probs[picks])
    return (a[:, picks] * scale) @ b[picks]


def sketch_errors(a, b, probs, s: int, trials: int, rng: np.random.Generator,
                  chunk: int = 200_000) -> np.ndarray:
    """Per-trial ``||A S B - AB||_F^2`` for ``trials`` independent sketches.

    Each sketch is summarized by its multinomial draw counts ``c``; with
    ``X_k = A_{*,k} B_{k,*} / p_k - AB`` the error is
    ``c^T G c / s^2`` where ``G_{jk} = <X_j, X_k>``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    live = np.flatnonzero(probs > 0)
    ab = a @ b
    xs = np.stack([np.outer(a[:, k], b[k]) / probs[k] - ab for k in live])
    flat = xs.reshape(live.size, -1)
    gram = flat @ flat.T
    out = np.empty(trials)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        counts = rng.multinomial(s, probs[live], size=m).astype(np.float64)
        out[done:done + m] = np.einsum("ij,jk,ik->i", counts, gram, counts) / (s * s)
        done += m
    return out


# -- reports -------------------------------------------------------------------

@dataclass
class VarianceReport:
    scheme: str
    empirical: float
    std_error: float
    trials: int
    closed_form: float | None = None
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _mean_se(x):
    x = np.asarray(x, dtype=np.float64)
    se = float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else float("nan")
    return float(x.mean()), se


def single_layer_estimate(plan: BatchPlan, hw: np.ndarray, h_bar_w: np.ndarray | None = None,
                          exact_history: np.ndarray | None = None) -> np.ndarray:
    """``Z_tilde`` for the batch rows of a one-layer plan.

    With a history term the sampled part estimates ``P (H - H_bar) W`` and
    ``exact_history`` (the batch rows of ``P H_bar W``) is added back.
    """
    lp = plan.layers[0]
    src = hw if h_bar_w is None else hw - h_bar_w
    est = np.asarray(lp.p_tilde @ src[lp.lower_nodes])
    if exact_history is not None:
        est = est + exact_history
    return est


def empirical_variance(config: SamplerConfig, p: Laplacian, g: SparseGraph, h, w,
                       batch, trials: int, rng: np.random.Generator,
                       h_bar=None) -> VarianceReport:
    """Monte-Carlo ``E||Z_tilde - QZ||_F^2 / b`` over single-layer plans.

    ``batch`` is either fixed node ids or an int ``b``, in which case every
    trial also draws a fresh uniform batch of that size from all nodes.
    ``h_bar`` turns neighbor sampling into its history-corrected form.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    hw = np.asarray(h, dtype=np.float64) @ w
    z = np.asarray(p.matrix @ hw)
    hbw = None if h_bar is None else np.asarray(h_bar, dtype=np.float64) @ w
    zh = None if hbw is None else np.asarray(p.matrix @ hbw)
    random_batch = np.ndim(batch) == 0
    b = int(batch) if random_batch else np.asarray(batch).size
    errs = np.empty(trials)
    for t in range(trials):
        q = (np.sort(rng.choice(p.num_nodes, size=b, replace=False))
             if random_batch else np.asarray(batch, dtype=np.int64))
        plan = config.plan(p, g, q, 1, rng)
        est = single_layer_estimate(plan, hw, hbw, None if zh is None else zh[q])
        errs[t] = np.sum((est - z[q]) ** 2)
    mean, se = _mean_se(errs / b)
    params = {"b": b, "random_batch": random_batch, "s_layer": config.s_layer,
              "s_node": config.s_node, "normalize": config.normalize,
              "keep_upper": config.keep_upper, "replace": config.replace}
    return VarianceReport(config.kind, mean, se, trials, params=params)


def paired_empirical(configs, p: Laplacian, g: SparseGraph, hw, b: int, trials: int,
                     rng: np.random.Generator) -> list[VarianceReport]:
    """Per-node variance of several samplers on shared random batches.

    Every trial draws one uniform batch of size ``b`` and one sketch per
    config, so batch-to-batch noise cancels in comparisons.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    hw = np.asarray(hw, dtype=np.float64)
    z = np.asarray(p.matrix @ hw)
    errs = np.empty((len(configs), trials))
    for t in range(trials):
        q = np.sort(rng.choice(p.num_nodes, size=int(b), replace=False))
        for k, cfg in enumerate(configs):
            est = single_layer_estimate(cfg.plan(p, g, q, 1, rng), hw)
            errs[k, t] = np.sum((est - z[q]) ** 2) / b
    out = []
    for cfg, e in zip(configs, errs):
        mean, se = _mean_se(e)
        out.append(VarianceReport(cfg.kind, mean, se, trials,
                                  params={"b": int(b), "s_layer": cfg.s_layer,
                                          "s_node": cfg.s_node, "normalize": cfg.normalize,
                                          "keep_upper": cfg.keep_upper}))
    return out


# -- closed forms --------------------------------------------------------------

def _sq_row_norms(m):
    return np.sum(np.asarray(m) ** 2, axis=1)


def ladies_exact_form(p: Laplacian, g: SparseGraph, hw, batch, s: int) -> float:
    """``(||QP||^2 ||L HW||^2 - ||QZ||^2) / (s b)`` for the plain LADIES sketch.

    With ``batch`` an int ``b`` the expectation over uniform ``b``-subsets is
    computed exactly: node ``j`` lies in ``N[Q]`` unless ``Q`` avoids its
    closed neighborhood (a hypergeometric event).
    """
    hw = np.asarray(hw, dtype=np.float64)
    z = np.asarray(p.matrix @ hw)
    r = p.row_sq_norms()
    hsq = _sq_row_norms(hw)
    n = p.num_nodes
    if np.ndim(batch) == 0:
        b = int(batch)
        total_r = r.sum()
        closed = np.diff(p.row_ptr)
        miss = avoid_probability(n - 1, closed, b - 1)
        r_near = np.asarray(p.matrix.sign() @ r)
        cross = total_r * hsq.sum() - np.sum(hsq * miss * (total_r - r_near))
        expect = (b / n) * cross - (b / n) * np.sum(z * z)
        return float(expect / (s * b))
    q = np.asarray(batch, dtype=np.int64)
    cand = neighbor_union(g, q)
    qp_sq = r[q].sum()
    val = qp_sq * hsq[cand].sum() - np.sum(z[q] ** 2)
    return float(val / (s * q.size))


def instance_constants(p: Laplacian) -> dict:
    """``C1``, ``C2`` of the row-sparsity and row-norm regularity assumptions."""
    n = p.num_nodes
    nnz = np.diff(p.row_ptr)
    r = p.row_sq_norms()
    return {"C1": float(nnz.max() * n / nnz.sum()), "C2": float(r.max() * n / r.sum())}


def ladies_variance_bound(p: Laplacian, g: SparseGraph, batch, s: int, phi: float | None = None,
                          h=None, w=None) -> float:
    """LADIES per-node variance: exact form when ``h, w`` given, else the phi-bound.

    The bound is ``C2 phi^2 ||P||_F^2 V / (|V| s)`` with ``phi`` an upper
    bound on the row norms of ``HW`` and ``V`` the candidate-set size
    (``|N[Q]|`` for a fixed batch, ``V_bar(b)`` for an int ``b``).
    """
    if h is not None and w is not None:
        hw = np.asarray(h, dtype=np.float64) @ w
        if phi is not None and phi < np.sqrt(_sq_row_norms(hw).max()) * (1 - 1e-12):
            raise ValueError(f"phi={phi} is below the largest row norm of HW")
        return ladies_exact_form(p, g, hw, batch, s)
    if phi is None:
        raise ValueError("need either (h, w) or phi")
    if np.ndim(batch) == 0:
        v = expected_union_size(g, int(batch))
    else:
        v = neighbor_union(g, batch).size
    c2 = instance_constants(p)["C2"]
    return float(c2 * phi ** 2 * p.frob_sq * v / (p.num_nodes * s))


def fastgcn_variance(p: Laplacian, h, w, b: int, s: int) -> float:
    """``(||P||_F^2 ||HW||_F^2 - ||Z||_F^2) / (|V| s)``, averaged over uniform batches.

    ``b`` cancels in the per-node form; it is kept for symmetry with the
    other closed forms.
    """
    hw = np.asarray(h, dtype=np.float64) @ w
    z = np.asarray(p.matrix @ hw)
    return float((p.frob_sq * np.sum(hw * hw) - np.sum(z * z)) / (p.num_nodes * s))


def fastgcn_exact_form(p: Laplacian, hw, batch, s: int) -> float:
    """FastGCN per-node variance conditional on a fixed batch."""
    hw = np.asarray(hw, dtype=np.float64)
    q = np.asarray(batch, dtype=np.int64)
    qp = p.matrix[q, :]
    z = np.asarray(qp @ hw)
    probs = fastgcn_probs(p)
    live = probs > 0
    col = np.bincount(qp.indices, weights=qp.data ** 2, minlength=p.num_nodes)
    term = np.sum(col[live] * _sq_row_norms(hw)[live] / probs[live])
    return float((term - np.sum(z * z)) / (s * q.size))


def graphsage_variance(p: Laplacian, g: SparseGraph, h, w, b: int, m: int) -> float:
    """Per-node variance of with-replacement neighbor sampling, ``m`` draws per node.

    ``(1/(m|V|)) sum_i [ |N(i)| sum_j ||P_ij h_j W||^2 - ||z_i||^2 ]``,
    averaged over uniform batches.
    """
    hw = np.asarray(h, dtype=np.float64) @ w
    return _node_wise_variance(p, hw, m)


def _node_wise_variance(p: Laplacian, hw, m):
    z = np.asarray(p.matrix @ hw)
    pm = p.matrix
    sq = sp.csr_matrix((pm.data ** 2, pm.indices, pm.indptr), shape=pm.shape)
    spread = np.asarray(sq @ _sq_row_norms(hw)).ravel()
    deg = np.diff(p.row_ptr)
    per_row = deg * spread - _sq_row_norms(z)
    return float(per_row.sum() / (m * p.num_nodes))


def vrgcn_variance(p: Laplacian, g: SparseGraph, h, h_bar, w, b: int, m: int) -> float:
    """Neighbor-sampling variance with ``H`` replaced by ``H - H_bar``."""
    hw = (np.asarray(h, dtype=np.float64) - np.asarray(h_bar, dtype=np.float64)) @ w
    return _node_wise_variance(p, hw, m)


# -- zero rows -----------------------------------------------------------------

def zero_row_census(config: SamplerConfig, p: Laplacian, g: SparseGraph, batch,
                    num_layers: int, trials: int, rng: np.random.Generator) -> dict:
    """Count plans (and rows) whose sampled blocks contain all-zero rows."""
    random_batch = np.ndim(batch) == 0
    plans_hit = rows_hit = rows_total = 0
    for _ in range(trials):
        q = (np.sort(rng.choice(p.num_nodes, size=int(batch), replace=False))
             if random_batch else batch)
        plan = config.plan(p, g, q, num_layers, rng)
        z = plan.zero_row_count()
        plans_hit += z > 0
        rows_hit += z
        rows_total += sum(lp.upper_nodes.size for lp in plan.layers)
    return {"scheme": config.kind, "trials": trials,
            "plans_with_zero_rows": int(plans_hit),
            "zero_row_plan_frequency": plans_hit / trials,
            "zero_row_fraction": rows_hit / rows_total}


# -- complexity ----------------------------------------------------------------

@dataclass
class ComplexityEstimate:
    scheme: str
    memory_terms: dict
    time_terms: dict

    @property
    def memory(self) -> float:
        return float(sum(self.memory_terms.values()))

    @property
    def time(self) -> float:
        return float(sum(self.time_terms.values()))

    def to_dict(self) -> dict:
        return {"scheme": self.scheme, "memory_terms": self.memory_terms,
                "time_terms": self.time_terms, "memory": self.memory, "time": self.time}


def complexity_estimate(scheme: str, L: int, K: int, n: int, norm_a0: int, b: int = 0,
                        s_node: int = 0, s_layer: int = 0, avg_degree: float | None = None
                        ) -> ComplexityEstimate:
    """Evaluate the memory/time cost model of each training scheme.

    Terms are keyed by their symbolic form. ``avg_degree`` defaults to
    ``norm_a0 / n``.
    """
    D = norm_a0 / n if avg_degree is None else avg_degree
    weights = {"L*K^2": L * K * K}
    if scheme == "full":
        mem = {"L*n*K": L * n * K}
        tm = {"L*||A||_0*K": L * norm_a0 * K, "L*n*K^2": L * n * K * K}
    elif scheme in ("neighbor", "graphsage"):
        mem = {"b*K*s_node^(L-1)": b * K * s_node ** (L - 1)}
        tm = {"b*K*s_node^L": b * K * s_node ** L,
              "b*K^2*s_node^(L-1)": b * K * K * s_node ** (L - 1)}
    elif scheme == "vrgcn":
        mem = {"L*n*K": L * n * K}
        tm = {"b*D*K*s_node^(L-1)": b * D * K * s_node ** (L - 1),
              "b*K^2*s_node^(L-1)": b * K * K * s_node ** (L - 1)}
    elif scheme in ("ladies", "fastgcn"):
        mem = {"L*K*s_layer": L * K * s_layer}
        tm = {"L*K*s_layer^2": L * K * s_layer ** 2, "L*K^2*s_layer": L * K * K * s_layer}
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    mem.update(weights)
    mem = {k: float(v) for k, v in mem.items()}
    tm = {k: float(v) for k, v in tm.items()}
    return ComplexityEstimate(scheme, mem, tm)


def activation_count(plan: BatchPlan, width: int) -> int:
    """Embeddings a sampled forward pass stores: ``sum_l rows(Z^(l)) * width``."""
    return int(sum(lp.upper_nodes.size for lp in plan.layers) * width)


@dataclass
class Actuals:
    activation_floats: int
    batch_ms_mean: float
    batch_ms_std: float


def measure_actuals(plans, width: int, batch_seconds=()) -> Actuals:
    """Peak activation count over ``plans`` and per-batch wall time in ms."""
    if isinstance(plans, BatchPlan):
        plans = [plans]
    peak = max(activation_count(pl, width) for pl in plans)
    ms = np.asarray(batch_seconds, dtype=np.float64) * 1e3
    if ms.size:
        return Actuals(peak, float(ms.mean()), float(ms.std(ddof=1)) if ms.size > 1 else 0.0)
    return Actuals(peak, float("nan"), float("nan"))


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0
