"""Training loop with early stopping, benchmark tables and the variance study."""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, degree_stats
from .errors import DivergenceError
from .graph import Laplacian, normalized_laplacian
from .model import (AdamState, GcnModel, adam_step, forward_exact, forward_sampled,
                    hidden_activations, init_weights, loss_and_grad)
from .samplers import SamplerConfig, full_batch_plan, sample_batch
from . import variance as V

BYTES_PER_FLOAT = 4


@dataclass(frozen=True)
class TrainConfig:
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    num_layers: int = 5
    hidden: int = 256
    batch_size: int = 512
    lr: float = 0.001
    threshold: float = 0.01
    patience: int = 200
    max_batches: int = 10_000
    eval_every: int = 1
    reps: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("num_layers", "hidden", "batch_size", "patience", "max_batches",
                     "eval_every", "reps"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if not self.lr > 0:
            raise ValueError("lr must be positive")


def micro_f1(predictions, labels) -> float:
    """Micro-averaged F1; with one label per node this is plain accuracy."""
    predictions = np.asarray(predictions).ravel()
    labels = np.asarray(labels).ravel()
    if predictions.size != labels.size:
        raise ValueError("predictions and labels differ in length")
    if labels.size == 0:
        return 0.0
    tp = np.count_nonzero(predictions == labels)
    fp = fn = labels.size - tp
    return float(2 * tp / (2 * tp + fp + fn))


@dataclass
class RunResult:
    """One repetition."""

    test_f1: float
    best_val_f1: float
    train_seconds: float
    batch_ms_mean: float
    batch_ms_std: float
    batches_at_best: int
    batches_run: int
    activation_floats: int
    param_floats: int
    diverged: bool = False
    error: str = ""
    val_history: list = field(default_factory=list, repr=False)
    model: GcnModel | None = field(default=None, repr=False)

    @property
    def memory_mb(self) -> float:
        return (self.activation_floats + self.param_floats) * BYTES_PER_FLOAT / 2 ** 20


def _evaluator(p: Laplacian, ds: Dataset):
    def evaluate(model: GcnModel, nodes) -> float:
        logits = forward_exact(model, p, ds.features)
        return micro_f1(logits[nodes].argmax(axis=1), ds.labels[nodes])
    return evaluate


def train(config: TrainConfig, ds: Dataset, *, seed: int | None = None, p: Laplacian | None = None,
          clock=time.perf_counter, evaluator=None) -> RunResult:
    """Train one GCN with mini-batches from ``config.sampler``.

    Validation F1 is computed with the full-batch forward every
    ``eval_every`` batches, outside the training clock. The best-validation
    weights are kept; patience resets only when validation beats the value
    that last reset it by more than ``threshold``. ``evaluator(model,
    nodes) -> f1`` may be injected for tests.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    p = normalized_laplacian(ds.graph) if p is None else p
    evaluate = evaluator or _evaluator(p, ds)
    dims = [ds.num_features] + [config.hidden] * (config.num_layers - 1) + [ds.num_classes]
    model = init_weights(dims, rng)
    adam = AdamState.for_model(model, config.lr)
    width = model.hidden_dim

    best_model, best_val, best_at = model.copy(), -1.0, 0
    ref, since = -np.inf, 0
    elapsed, batch_times, peak = 0.0, [], 0
    history = []
    diverged, error, step = False, "", 0
    while step < config.max_batches:
        t0 = clock()
        try:
            batch = sample_batch(ds.train, config.batch_size, rng)
            plan = config.sampler.plan(p, ds.graph, batch, config.num_layers, rng)
            logits, trace = forward_sampled(model, plan, ds.features)
            loss, grads = loss_and_grad(model, trace, logits, ds.labels[batch])
            if not np.isfinite(loss):
                raise DivergenceError("non-finite loss")
            adam_step(model, adam, grads)
        except DivergenceError as exc:
            diverged, error = True, str(exc)
            break
        dt = clock() - t0
        elapsed += dt
        batch_times.append(dt)
        peak = max(peak, V.activation_count(plan, width))
        step += 1
        if step % config.eval_every:
            continue
        val = evaluate(model, ds.val)
        history.append(val)
        if val > best_val:
            best_val, best_model, best_at = val, model.copy(), step
        if val > ref + config.threshold:
            ref, since = val, 0
        else:
            since += config.eval_every
            if since >= config.patience:
                break
    test = evaluate(best_model, ds.test) if best_val >= 0 else 0.0
    ms = np.asarray(batch_times) * 1e3
    return RunResult(
        test_f1=float(test), best_val_f1=float(max(best_val, 0.0)), train_seconds=elapsed,
        batch_ms_mean=float(ms.mean()) if ms.size else 0.0,
        batch_ms_std=float(ms.std(ddof=1)) if ms.size > 1 else 0.0,
        batches_at_best=best_at, batches_run=step, activation_floats=peak,
        param_floats=model.num_params(), diverged=diverged, error=error, val_history=history,
        model=best_model)


@dataclass
class RunMetrics:
    """Mean and standard deviation over repetitions."""

    label: str
    runs: list

    def _stat(self, key):
        vals = np.array([getattr(r, key) for r in self.runs if not r.diverged], dtype=np.float64)
        if vals.size == 0:
            return float("nan"), float("nan")
        return float(vals.mean()), float(vals.std(ddof=1)) if vals.size > 1 else 0.0

    @property
    def diverged(self) -> int:
        return sum(r.diverged for r in self.runs)

    def summary(self) -> dict:
        out = {"sampler": self.label, "reps": len(self.runs), "diverged": self.diverged}
        for key in ("test_f1", "train_seconds", "memory_mb", "batch_ms_mean",
                    "batches_at_best", "activation_floats"):
            out[key + "_mean"], out[key + "_std"] = self._stat(key)
        return out


def run_repetitions(config: TrainConfig, ds: Dataset, **kw) -> RunMetrics:
    p = normalized_laplacian(ds.graph)
    runs = [train(config, ds, seed=config.seed + r, p=p, **kw) for r in range(config.reps)]
    return RunMetrics(config.sampler.label, runs)


BENCHMARK_HEADER = ["dataset", "sampler", "f1_mean", "f1_std", "total_time_s_mean",
                    "total_time_s_std", "mem_mb_mean", "mem_mb_std", "batch_time_ms_mean",
                    "batch_time_ms_std", "batch_num_mean", "batch_num_std", "reps", "diverged"]


def benchmark_row(dataset_name: str, metrics: RunMetrics) -> list:
    s = metrics.summary()
    return [dataset_name, metrics.label,
            f"{s['test_f1_mean']:.4f}", f"{s['test_f1_std']:.4f}",
            f"{s['train_seconds_mean']:.3f}", f"{s['train_seconds_std']:.3f}",
            f"{s['memory_mb_mean']:.3f}", f"{s['memory_mb_std']:.3f}",
            f"{s['batch_ms_mean_mean']:.3f}", f"{s['batch_ms_mean_std']:.3f}",
            f"{s['batches_at_best_mean']:.1f}", f"{s['batches_at_best_std']:.1f}",
            s["reps"], s["diverged"]]


def default_benchmark_samplers() -> list[SamplerConfig]:
    """The row set of the published comparison table."""
    return [SamplerConfig("full"), SamplerConfig("neighbor", s_node=5),
            SamplerConfig("fastgcn", s_layer=64), SamplerConfig("fastgcn", s_layer=512),
            SamplerConfig("ladies", s_layer=64), SamplerConfig("ladies", s_layer=512)]


def run_benchmark(configs, ds: Dataset, out=None) -> str:
    """Train every config and return (and optionally write) the CSV table."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCHMARK_HEADER)
    for cfg in configs:
        writer.writerow(benchmark_row(ds.name, run_repetitions(cfg, ds)))
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", newline="") as f:
            f.write(text)
    return text


# -- variance study ---------------------------------------------------------------

VARIANCE_SCHEMA = {
    "type": "object",
    "required": ["dataset", "b", "trials", "instance", "records", "zero_rows"],
    "properties": {
        "dataset": {"type": "string"},
        "b": {"type": "integer", "minimum": 1},
        "trials": {"type": "integer", "minimum": 2},
        "instance": {
            "type": "object",
            "required": ["n", "nnz", "frob_sq", "average_degree", "v_bar", "C1", "C2", "phi"],
        },
        "records": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["scheme", "s", "normalize", "empirical", "std_error", "closed_form"],
                "properties": {
                    "scheme": {"enum": ["ladies", "fastgcn", "neighbor", "vrgcn"]},
                    "s": {"type": "integer", "minimum": 1},
                    "normalize": {"type": "boolean"},
                    "empirical": {"type": "number", "minimum": 0},
                    "std_error": {"type": "number", "minimum": 0},
                    "closed_form": {"type": ["number", "null"]},
                },
            },
        },
        "zero_rows": {"type": "array"},
    },
}


@dataclass(frozen=True)
class VarianceStudyConfig:
    s_values: tuple = (8, 16, 32, 64)
    s_node_values: tuple = (2, 4, 8)
    b: int = 64
    trials: int = 500
    warmup_steps: int = 50
    hidden: int = 16
    census_trials: int = 200
    census_layers: int = 2
    seed: int = 0


def study_activations(ds: Dataset, p: Laplacian, hidden: int, steps: int, rng):
    """``H`` and ``W`` of the second layer of a 2-layer full-batch GCN after ``steps`` Adam steps."""
    model = init_weights([ds.num_features, hidden, ds.num_classes], rng)
    adam = AdamState.for_model(model, 0.01)
    plan = full_batch_plan(p, 2, ds.train)
    for _ in range(steps):
        logits, trace = forward_sampled(model, plan, ds.features)
        _, grads = loss_and_grad(model, trace, logits, ds.labels[ds.train])
        adam_step(model, adam, grads)
    h = hidden_activations(model, p, ds.features)[1]
    return h, model.weights[1], model


def run_variance_study(cfg: VarianceStudyConfig, ds: Dataset) -> dict:
    """Empirical and closed-form single-layer variances for every scheme and budget."""
    rng = np.random.default_rng(cfg.seed)
    p = normalized_laplacian(ds.graph)
    g = ds.graph
    h, w, _ = study_activations(ds, p, cfg.hidden, cfg.warmup_steps, rng)
    hw = h @ w
    stats = degree_stats(g, cfg.b)
    consts = V.instance_constants(p)
    phi = float(np.sqrt(np.max(np.sum(hw * hw, axis=1))))
    records = []
    for s in cfg.s_values:
        for norm in (False, True):
            configs = [SamplerConfig("ladies", s_layer=s, normalize=norm, keep_upper=False),
                       SamplerConfig("fastgcn", s_layer=s, normalize=norm)]
            reps = V.paired_empirical(configs, p, g, hw, cfg.b, cfg.trials, rng)
            closed = [V.ladies_exact_form(p, g, hw, cfg.b, s), V.fastgcn_variance(p, h, w, cfg.b, s)]
            for rep, cf in zip(reps, closed):
                rec = {"scheme": rep.scheme, "s": int(s), "normalize": norm,
                       "empirical": rep.empirical, "std_error": rep.std_error,
                       "closed_form": None if norm else cf}
                if rep.scheme == "ladies" and not norm:
                    rec["phi_bound"] = V.ladies_variance_bound(p, g, cfg.b, s, phi)
                records.append(rec)
    for m in cfg.s_node_values:
        for norm in (False, True):
            sage = SamplerConfig("neighbor", s_node=m, normalize=norm, replace=True)
            rep = V.empirical_variance(sage, p, g, h, w, cfg.b, cfg.trials, rng)
            records.append({"scheme": "neighbor", "s": int(m), "normalize": norm,
                            "empirical": rep.empirical, "std_error": rep.std_error,
                            "closed_form": None if norm else V.graphsage_variance(p, g, h, w, cfg.b, m)})
        h_bar = h + 0.1 * rng.standard_normal(h.shape) * np.abs(h).mean()
        rep = V.empirical_variance(SamplerConfig("neighbor", s_node=m, normalize=False, replace=True),
                                   p, g, h, w, cfg.b, cfg.trials, rng, h_bar=h_bar)
        records.append({"scheme": "vrgcn", "s": int(m), "normalize": False,
                        "empirical": rep.empirical, "std_error": rep.std_error,
                        "closed_form": V.vrgcn_variance(p, g, h, h_bar, w, cfg.b, m)})
    census = []
    for kind in ("ladies", "fastgcn"):
        sc = SamplerConfig(kind, s_layer=min(cfg.s_values))
        census.append(V.zero_row_census(sc, p, g, cfg.b, cfg.census_layers, cfg.census_trials, rng))
    return {
        "dataset": ds.name, "b": int(cfg.b), "trials": int(cfg.trials),
        "instance": {"n": p.num_nodes, "nnz": p.nnz, "frob_sq": p.frob_sq,
                     "average_degree": stats.average_degree, "v_bar": stats.v_bar,
                     "C1": consts["C1"], "C2": consts["C2"], "phi": phi},
        "records": records, "zero_rows": census,
    }


def complexity_table(ds: Dataset, config: TrainConfig, s_node: int, s_layer: int,
                     rng=None) -> list[dict]:
    """Formula values next to measured activation counts for each scheme."""
    rng = np.random.default_rng(config.seed) if rng is None else rng
    g = ds.graph
    p = normalized_laplacian(g)
    n, a0, L, K, b = ds.num_nodes, g.num_edges, config.num_layers, config.hidden, config.batch_size
    rows = []
    for scheme in ("full", "neighbor", "vrgcn", "fastgcn", "ladies"):
        est = V.complexity_estimate(scheme, L, K, n, a0, b, s_node, s_layer)
        row = est.to_dict()
        if scheme != "vrgcn":
            if scheme == "full":
                plan = full_batch_plan(p, L)
            else:
                sc = SamplerConfig(scheme, s_layer=s_layer, s_node=s_node)
                plan = sc.plan(p, g, sample_batch(ds.train, b, rng), L, rng)
            row["measured_activation_floats"] = V.activation_count(plan, K)
        rows.append(row)
    return rows
