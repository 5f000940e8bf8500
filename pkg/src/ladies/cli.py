"""Command-line entry point: ``ladies {train,benchmark,variance,complexity,gen-data}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from .data import (Dataset, generate, load_dataset, read_spec_mapping, spec_from_mapping,
                   write_dataset)
from .errors import LadiesError
from .model import save_model
from .samplers import SCHEMES, SamplerConfig
from .train import (BENCHMARK_HEADER, TrainConfig, VarianceStudyConfig, benchmark_row,
                    complexity_table, default_benchmark_samplers, run_repetitions,
                    run_variance_study)
from . import variance as V


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _ints(value: str) -> tuple:
    return tuple(int(v) for v in value.replace(",", " ").split())


def _data_args(ap):
    ap.add_argument("--dataset", metavar="DIR", help="four-file dataset directory")
    ap.add_argument("--spec", metavar="FILE", help="synthetic generator key=value file")
    ap.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                    help="synthetic generator option (repeatable)")
    ap.add_argument("--raw-features", action="store_true", help="skip L1 row normalization")


def _model_args(ap, sampler=True):
    if sampler:
        ap.add_argument("--sampler", choices=SCHEMES, default="ladies")
    ap.add_argument("--s-layer", type=int, default=64)
    ap.add_argument("--s-node", type=int, default=5)
    ap.add_argument("--layers", type=int, default=5)
    ap.add_argument("--hidden", type=int, default=256)
    ap.add_argument("--batch", type=int, default=512)
    ap.add_argument("--lr", type=float, default=0.001)
    ap.add_argument("--patience", type=int, default=200)
    ap.add_argument("--threshold", type=float, default=0.01)
    ap.add_argument("--max-batches", type=int, default=10_000)
    ap.add_argument("--eval-every", type=int, default=1)
    ap.add_argument("--reps", type=int, default=10)
    ap.add_argument("--normalize", type=_on_off, default=None, metavar="{on,off}")
    ap.add_argument("--keep-upper", type=_on_off, default=True, metavar="{on,off}",
                    help="LADIES: carry upper-layer nodes into the layer below (default on)")


def _common(ap, formats=("json", "text")):
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    ap.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ladies", description="Sampled GCN training experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train with one sampler, repeated --reps times")
    _data_args(t)
    _model_args(t)
    t.add_argument("--save-model", metavar="PATH", help="checkpoint of the first repetition")
    _common(t, ("json", "text", "csv"))

    b = sub.add_parser("benchmark", help="comparison table over several samplers (CSV)")
    _data_args(b)
    _model_args(b, sampler=False)
    b.add_argument("--sampler", action="append", choices=SCHEMES,
                   help="restrict to these schemes (default: the full row set)")
    b.add_argument("--s-layers", type=_ints, default=(64, 512),
                   help="layer budgets for fastgcn/ladies rows")
    _common(b, ("csv", "json", "text"))

    v = sub.add_parser("variance", help="empirical vs closed-form single-layer variance")
    _data_args(v)
    v.add_argument("--batch", type=int, default=64)
    v.add_argument("--s-values", type=_ints, default=(8, 16, 32, 64))
    v.add_argument("--s-node-values", type=_ints, default=(2, 4, 8))
    v.add_argument("--trials", type=int, default=500)
    v.add_argument("--hidden", type=int, default=16)
    v.add_argument("--warmup", type=int, default=50, help="full-batch steps before measuring")
    _common(v)

    c = sub.add_parser("complexity", help="memory/time cost model per scheme")
    _data_args(c)
    c.add_argument("--nodes", type=int, help="node count when no dataset is given")
    c.add_argument("--edges", type=int, help="||A||_0 when no dataset is given")
    _model_args(c, sampler=False)
    _common(c)

    gd = sub.add_parser("gen-data", help="write a synthetic dataset directory")
    _data_args(gd)
    gd.add_argument("--seed", type=int, default=None)
    gd.add_argument("--out", metavar="DIR", required=True)
    return ap


def _dataset(args, seed=None) -> Dataset:
    if args.dataset and (args.spec or args.set):
        raise LadiesError("give either --dataset or a synthetic spec, not both")
    if args.dataset:
        return load_dataset(args.dataset, normalize_features=not args.raw_features)
    if not (args.spec or args.set):
        raise LadiesError("no data: pass --dataset DIR, --spec FILE or --set KEY=VALUE")
    kv = read_spec_mapping(args.spec) if args.spec else {}
    for item in args.set:
        if "=" not in item:
            raise LadiesError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        kv[key.strip().replace("-", "_")] = value.strip()
    if seed is not None:
        kv["seed"] = seed
    return generate(spec_from_mapping(kv))


def _sampler(args, kind, s_layer=None) -> SamplerConfig:
    return SamplerConfig(kind, s_layer=s_layer or args.s_layer, s_node=args.s_node,
                         normalize=args.normalize, keep_upper=args.keep_upper)


def _train_config(args, sampler) -> TrainConfig:
    return TrainConfig(sampler=sampler, num_layers=args.layers, hidden=args.hidden,
                       batch_size=args.batch, lr=args.lr, threshold=args.threshold,
                       patience=args.patience, max_batches=args.max_batches,
                       eval_every=args.eval_every, reps=args.reps, seed=args.seed)


def _text_table(rows) -> str:
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _render_table(rows, fmt) -> str:
    if fmt == "csv":
        return _csv(rows)
    if fmt == "text":
        return _text_table(rows)
    header, *body = rows
    return json.dumps([dict(zip(header, r)) for r in body], indent=2) + "\n"


def cmd_train(args) -> None:
    ds = _dataset(args)
    cfg = _train_config(args, _sampler(args, args.sampler))
    metrics = run_repetitions(cfg, ds)
    if args.save_model and metrics.runs and metrics.runs[0].model is not None:
        save_model(metrics.runs[0].model, args.save_model)
    if args.format == "json":
        runs = [{k: v for k, v in vars(r).items() if k not in ("model", "val_history")}
                for r in metrics.runs]
        text = json.dumps({"dataset": ds.name, "summary": metrics.summary(), "runs": runs},
                          indent=2) + "\n"
    else:
        text = _render_table([BENCHMARK_HEADER, benchmark_row(ds.name, metrics)], args.format)
    _emit(text, args.out)


def cmd_benchmark(args) -> None:
    ds = _dataset(args)
    configs = []
    for sc in default_benchmark_samplers():
        if args.sampler and sc.kind not in args.sampler:
            continue
        if sc.kind in ("ladies", "fastgcn"):
            if sc.s_layer != 64:
                continue
            configs += [_sampler(args, sc.kind, s) for s in args.s_layers]
        else:
            configs.append(_sampler(args, sc.kind))
    rows = [BENCHMARK_HEADER]
    for sc in configs:
        rows.append(benchmark_row(ds.name, run_repetitions(_train_config(args, sc), ds)))
    _emit(_render_table(rows, args.format), args.out)


def cmd_variance(args) -> None:
    ds = _dataset(args)
    cfg = VarianceStudyConfig(s_values=args.s_values, s_node_values=args.s_node_values,
                              b=args.batch, trials=args.trials, warmup_steps=args.warmup,
                              hidden=args.hidden, seed=args.seed)
    report = run_variance_study(cfg, ds)
    if args.format == "json":
        text = json.dumps(report, indent=2) + "\n"
    else:
        rows = [["scheme", "s", "normalize", "empirical", "std_error", "closed_form"]]
        for r in report["records"]:
            cf = r["closed_form"]
            rows.append([r["scheme"], r["s"], "on" if r["normalize"] else "off",
                         f"{r['empirical']:.6g}", f"{r['std_error']:.3g}",
                         "-" if cf is None else f"{cf:.6g}"])
        text = _text_table(rows)
        for z in report["zero_rows"]:
            text += (f"zero rows {z['scheme']}: {z['plans_with_zero_rows']}/{z['trials']} plans, "
                     f"row fraction {z['zero_row_fraction']:.4g}\n")
    _emit(text, args.out)


def cmd_complexity(args) -> None:
    cfg = _train_config(args, SamplerConfig())
    if args.dataset or args.spec or args.set:
        rows = complexity_table(_dataset(args), cfg, args.s_node, args.s_layer)
    else:
        if args.nodes is None or args.edges is None:
            raise LadiesError("complexity needs a dataset or both --nodes and --edges")
        rows = [V.complexity_estimate(s, args.layers, args.hidden, args.nodes, args.edges,
                                      args.batch, args.s_node, args.s_layer).to_dict()
                for s in ("full", "neighbor", "vrgcn", "fastgcn", "ladies")]
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        table = [["scheme", "memory", "time", "measured_activation_floats"]]
        for r in rows:
            table.append([r["scheme"], f"{r['memory']:.6g}", f"{r['time']:.6g}",
                          r.get("measured_activation_floats", "-")])
        text = _text_table(table)
    _emit(text, args.out)


def cmd_gen_data(args) -> None:
    if args.dataset:
        raise LadiesError("gen-data builds synthetic data; --dataset is not accepted")
    ds = _dataset(args, seed=args.seed)
    path = write_dataset(ds, args.out)
    print(f"wrote {ds.name}: {ds.num_nodes} nodes, {ds.graph.num_edges // 2} edges -> {path}")


COMMANDS = {"train": cmd_train, "benchmark": cmd_benchmark, "variance": cmd_variance,
            "complexity": cmd_complexity, "gen-data": cmd_gen_data}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (LadiesError, ValueError, OSError, IndexError) as exc:
        print(f"ladies {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
