import json

import numpy as np
import pytest

from ladies.cli import main
from ladies.data import load_dataset
from ladies.model import load_model
from ladies.train import BENCHMARK_HEADER, VARIANCE_SCHEMA

SMALL = ["--set", "kind=sbm", "--set", "n=120", "--set", "blocks=2", "--set", "feature_dim=6"]
FAST = ["--layers", "2", "--hidden", "8", "--batch", "16", "--max-batches", "15",
        "--patience", "5", "--reps", "2"]


def test_gen_data_writes_loadable_dir(tmp_path, capsys):
    assert main(["gen-data", *SMALL, "--seed", "3", "--out", str(tmp_path / "d")]) == 0
    assert "120 nodes" in capsys.readouterr().out
    ds = load_dataset(tmp_path / "d")
    assert ds.num_nodes == 120
    # same seed, same bytes
    main(["gen-data", *SMALL, "--seed", "3", "--out", str(tmp_path / "e")])
    for name in ("graph.txt", "features.txt", "labels.txt", "splits.txt"):
        assert (tmp_path / "d" / name).read_bytes() == (tmp_path / "e" / name).read_bytes()


def test_spec_file_with_override(tmp_path):
    spec = tmp_path / "s.txt"
    spec.write_text("kind = er\nn = 40\np = 0.1\n")
    assert main(["gen-data", "--spec", str(spec), "--set", "n=30", "--out", str(tmp_path / "d")]) == 0
    assert load_dataset(tmp_path / "d").num_nodes == 30


def test_train_json_and_checkpoint(tmp_path):
    out, ckpt = tmp_path / "r.json", tmp_path / "m.gcnw"
    rc = main(["train", *SMALL, *FAST, "--sampler", "ladies", "--s-layer", "32",
               "--save-model", str(ckpt), "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert len(report["runs"]) == 2
    assert 0 <= report["summary"]["test_f1_mean"] <= 1
    model = load_model(ckpt)
    assert [w.shape for w in model.weights] == [(6, 8), (8, 2)]


def test_train_csv_row(tmp_path, capsys):
    assert main(["train", *SMALL, *FAST, "--sampler", "neighbor", "--s-node", "3",
                 "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",") == BENCHMARK_HEADER
    assert lines[1].split(",")[1] == "GraphSage (3)"


def test_benchmark_rows(tmp_path):
    out = tmp_path / "b.csv"
    rc = main(["benchmark", *SMALL, *FAST, "--sampler", "full", "--sampler", "ladies",
               "--s-layers", "16,32", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].split(",") == BENCHMARK_HEADER
    assert [l.split(",")[1] for l in lines[1:]] == ["Full-Batch", "LADIES (16)", "LADIES (32)"]


def test_variance_json_matches_schema(capsys):
    jsonschema = pytest.importorskip("jsonschema")
    rc = main(["variance", "--set", "kind=er", "--set", "n=80", "--set", "p=0.05",
               "--batch", "16", "--s-values", "8,16", "--s-node-values", "2",
               "--trials", "50", "--warmup", "5"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    jsonschema.validate(report, VARIANCE_SCHEMA)
    assert {r["s"] for r in report["records"] if r["scheme"] == "ladies"} == {8, 16}


def test_complexity_from_sizes(capsys):
    rc = main(["complexity", "--nodes", "1000", "--edges", "5000", "--layers", "2",
               "--hidden", "4", "--batch", "10", "--s-layer", "20", "--format", "json"])
    assert rc == 0
    rows = {r["scheme"]: r for r in json.loads(capsys.readouterr().out)}
    assert rows["full"]["memory"] == 2 * 1000 * 4 + 2 * 4 ** 2
    assert rows["ladies"]["memory"] < rows["full"]["memory"]
    assert main(["complexity", "--nodes", "10", "--edges", "20", "--format", "text"]) == 0
    assert capsys.readouterr().out.startswith("scheme")


@pytest.mark.parametrize("argv, msg", [
    (["train"], "no data"),
    (["train", "--dataset", "/nonexistent/dir"], "nonexistent"),
    (["complexity", "--nodes", "5"], "--edges"),
    (["train", *SMALL, "--set", "bogus"], "KEY=VALUE"),
    (["train", *SMALL, "--layers", "0"], "layers"),
])
def test_errors_exit_nonzero(argv, msg, capsys):
    assert main(argv) == 1
    err = capsys.readouterr().err
    assert err.startswith(f"ladies {argv[0]}: error:")
    assert msg in err


def test_bad_flag_value_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["train", "--normalize", "maybe"])
    assert exc.value.code == 2
