import importlib.util
import pickle
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from ladies.data import load_dataset

SCRIPT = Path(__file__).resolve().parents[1] / "scripts" / "planetoid_to_dir.py"


@pytest.fixture(scope="module")
def script():
    spec = importlib.util.spec_from_file_location("planetoid_to_dir", SCRIPT)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


def _rows(ids, classes=3):
    # feature 0 carries the node id, the label is id % classes
    ids = np.asarray(ids)
    x = np.zeros((len(ids), 4))
    x[:, 0] = ids + 1
    y = np.zeros((len(ids), classes))
    y[np.arange(len(ids)), ids % classes] = 1
    return x, y


def _write_raw(raw: Path, name: str, n_train=20, n_all=600, test_ids=range(600, 650), seed=0):
    rng = np.random.default_rng(seed)
    test_ids = np.array(list(test_ids))
    file_order = rng.permutation(test_ids)
    x, y = _rows(np.arange(n_train))
    allx, ally = _rows(np.arange(n_all))
    tx, ty = _rows(file_order)
    n = test_ids.max() + 1
    graph = {i: [int((i + 1) % n), int((i + 7) % n)] for i in range(n)}
    parts = {"x": sp.csr_matrix(x), "y": y, "tx": sp.csr_matrix(tx), "ty": ty,
             "allx": sp.csr_matrix(allx), "ally": ally, "graph": graph}
    raw.mkdir()
    for part, obj in parts.items():
        with open(raw / f"ind.{name}.{part}", "wb") as f:
            pickle.dump(obj, f)
    (raw / f"ind.{name}.test.index").write_text("\n".join(map(str, file_order)) + "\n")
    return test_ids


def test_contiguous_test_ids(script, tmp_path):
    test_ids = _write_raw(tmp_path / "raw", "fake")
    ds = script.convert(tmp_path / "raw", "fake")
    ids = np.arange(ds.num_nodes)
    np.testing.assert_array_equal(ds.features[:, 0], ids + 1)
    np.testing.assert_array_equal(ds.labels, ids % 3)
    np.testing.assert_array_equal(ds.train, np.arange(20))
    np.testing.assert_array_equal(ds.val, np.arange(20, 520))
    np.testing.assert_array_equal(ds.test, test_ids)
    assert {1, 7, 649, 643} == set(ds.graph.neighbors(0).tolist())


def test_missing_test_ids_padded(script, tmp_path):
    missing = {605, 631}
    kept = [i for i in range(600, 650) if i not in missing]
    _write_raw(tmp_path / "raw", "cite", test_ids=kept, seed=1)
    ds = script.convert(tmp_path / "raw", "cite")
    assert ds.num_nodes == 650
    for i in range(650):
        if i in missing:
            assert not ds.features[i].any()
        else:
            assert ds.features[i, 0] == i + 1 and ds.labels[i] == i % 3
    np.testing.assert_array_equal(ds.test, kept)


def test_main_writes_directory(script, tmp_path, capsys):
    _write_raw(tmp_path / "raw", "fake")
    assert script.main([str(tmp_path / "raw"), "fake", str(tmp_path / "out")]) == 0
    assert "20/500/50" in capsys.readouterr().out
    back = load_dataset(tmp_path / "out", normalize_features=False)
    np.testing.assert_array_equal(back.features[:, 0], np.arange(650) + 1)
    assert script.main([]) == 2
