#!/usr/bin/env python3
"""Convert the public Planetoid citation files into the four-file dataset directory.

Usage:
    planetoid_to_dir.py RAW_DIR NAME OUT_DIR

RAW_DIR holds ``ind.NAME.{x,y,tx,ty,allx,ally,graph,test.index}`` as
distributed with the original semi-supervised GCN code. The standard
split is kept: the first ``len(y)`` nodes train, the next 500 validate,
and ``test.index`` tests. Citeseer has test ids with no features; they
get zero feature rows and label 0 and are left out of every split.
Features are written raw; the loader L1-normalizes them by default.
"""
from __future__ import annotations

import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ladies.data import Dataset, write_dataset
from ladies.graph import build_graph


def _load(raw: Path, name: str, part: str):
    with open(raw / f"ind.{name}.{part}", "rb") as f:
        return pickle.load(f, encoding="latin1")


def convert(raw, name: str) -> Dataset:
    raw = Path(raw)
    x, y, tx, ty, allx, ally, graph = (_load(raw, name, k)
                                       for k in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_idx = np.array([int(l) for l in (raw / f"ind.{name}.test.index").read_text().split()])
    order = np.sort(test_idx)
    lo, hi = order[0], order[-1]
    tx, ty = sp.lil_matrix(tx), np.asarray(ty)
    if hi - lo + 1 != tx.shape[0]:
        # isolated test ids without features (citeseer)
        full_x = sp.lil_matrix((hi - lo + 1, tx.shape[1]))
        full_x[order - lo, :] = tx
        full_y = np.zeros((hi - lo + 1, ty.shape[1]))
        full_y[order - lo, :] = ty
        tx, ty = full_x, full_y
    features = sp.vstack([sp.csr_matrix(allx), sp.csr_matrix(tx)]).tolil()
    labels = np.vstack([np.asarray(ally), ty])
    features[test_idx, :] = features[order, :]
    labels[test_idx, :] = labels[order, :]

    n = features.shape[0]
    edges = [(u, v) for u, nbrs in graph.items() for v in nbrs if u < n and v < n]
    g = build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2), n)
    train = np.arange(len(y))
    val = np.arange(len(y), len(y) + 500)
    has_label = labels.sum(axis=1) > 0
    test = np.sort(test_idx[has_label[test_idx]])
    ds = Dataset(g, features.toarray(), labels.argmax(axis=1).astype(np.int64),
                 train, val, test, name=name)
    ds.validate()
    return ds


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    raw, name, out = argv
    ds = convert(raw, name)
    write_dataset(ds, out)
    print(f"{name}: {ds.num_nodes} nodes, {ds.graph.num_edges // 2} edges, "
          f"{ds.num_classes} classes, split {len(ds.train)}/{len(ds.val)}/{len(ds.test)} -> {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
