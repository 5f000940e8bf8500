"""Sparse graph storage and the normalized propagation matrix.

Everything here is immutable after construction. The CSR arrays are
plain numpy; a scipy view is built once for the sparse-dense products
the model needs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import GraphError


@dataclass(frozen=True)
class SparseGraph:
    """Undirected graph in CSR form, without self-loops."""

    num_nodes: int
    row_ptr: np.ndarray
    col_idx: np.ndarray

    @property
    def num_edges(self) -> int:
        """Number of stored (directed) entries, i.e. ``||A||_0``."""
        return int(self.col_idx.size)

    def degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.col_idx[self.row_ptr[v]:self.row_ptr[v + 1]]

    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(self.col_idx.size)
        return sp.csr_matrix((data, self.col_idx, self.row_ptr),
                             shape=(self.num_nodes, self.num_nodes))

    def edge_list(self) -> np.ndarray:
        """Each undirected edge once, as rows ``(u, v)`` with ``u < v``."""
        rows = np.repeat(np.arange(self.num_nodes), self.degrees())
        keep = rows < self.col_idx
        return np.column_stack([rows[keep], self.col_idx[keep]])

    def validate(self) -> None:
        n = self.num_nodes
        rp, ci = self.row_ptr, self.col_idx
        if rp.size != n + 1 or rp[0] != 0 or rp[-1] != ci.size:
            raise GraphError("row_ptr has wrong length or endpoints")
        if np.any(np.diff(rp) < 0):
            raise GraphError("row_ptr is decreasing")
        if ci.size and (ci.min() < 0 or ci.max() >= n):
            raise GraphError("col_idx entry out of range")
        rows = np.repeat(np.arange(n), np.diff(rp))
        if np.any(rows == ci):
            raise GraphError("self-loop stored")
        same_row = rows[1:] == rows[:-1]
        if np.any(ci[1:][same_row] <= ci[:-1][same_row]):
            raise GraphError("col_idx not strictly increasing within a row")
        a = self.adjacency()
        if (a != a.T).nnz:
            raise GraphError("adjacency is not symmetric")


def build_graph(edges, num_nodes: int) -> SparseGraph:
    """Build a symmetric, deduplicated, self-loop-free CSR graph.

    Input order, duplicate edges and edge direction are irrelevant.
    """
    num_nodes = int(num_nodes)
    if num_nodes < 0:
        raise GraphError(f"num_nodes must be non-negative, got {num_nodes}")
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    bad = np.flatnonzero((e < 0).any(axis=1) | (e >= num_nodes).any(axis=1))
    if bad.size:
        u, v = e[bad[0]]
        raise GraphError(
            f"edge #{bad[0]} ({u}, {v}) has an endpoint outside [0, {num_nodes})")
    e = e[e[:, 0] != e[:, 1]]
    both = np.concatenate([e, e[:, ::-1]])
    # unique on the packed key sorts by (row, col) as well
    key = np.unique(both[:, 0] * max(num_nodes, 1) + both[:, 1])
    rows, cols = np.divmod(key, max(num_nodes, 1))
    row_ptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=num_nodes), out=row_ptr[1:])
    return SparseGraph(num_nodes, row_ptr, cols.astype(np.int64))


@dataclass(frozen=True)
class Laplacian:
    """``P = D^-1/2 (A + I) D^-1/2`` in CSR form with cached column norms."""

    num_nodes: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    col_sq_norms: np.ndarray
    frob_sq: float
    _csr: sp.csr_matrix = field(repr=False, compare=False)

    @property
    def matrix(self) -> sp.csr_matrix:
        """Read-only scipy view sharing the CSR arrays."""
        return self._csr

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def row_nnz(self) -> np.ndarray:
        """``||P_{i,*}||_0``: closed-neighborhood sizes."""
        return np.diff(self.row_ptr)

    def row_sq_norms(self) -> np.ndarray:
        rows = np.repeat(np.arange(self.num_nodes), self.row_nnz())
        return np.bincount(rows, weights=self.values ** 2, minlength=self.num_nodes)

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()


def normalized_laplacian(g: SparseGraph) -> Laplacian:
    n = g.num_nodes
    deg = g.degrees().astype(np.float64) + 1.0
    # merge the diagonal into each sorted row
    rows = np.concatenate([np.repeat(np.arange(n), g.degrees()), np.arange(n)])
    cols = np.concatenate([g.col_idx, np.arange(n)])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    # d_i * d_j commutes exactly, so P[i,j] and P[j,i] are bitwise equal
    values = 1.0 / np.sqrt(deg[rows] * deg[cols])
    row_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=row_ptr[1:])
    col_sq = np.bincount(cols, weights=values ** 2, minlength=n)
    csr = sp.csr_matrix((values, cols, row_ptr), shape=(n, n))
    for arr in (row_ptr, cols, values, col_sq):
        arr.flags.writeable = False
    return Laplacian(n, row_ptr, cols, values, col_sq, float(np.sum(values ** 2)), csr)


def _check_rows(n: int, selected) -> np.ndarray:
    q = np.asarray(selected, dtype=np.int64).ravel()
    if q.size and (q.min() < 0 or q.max() >= n):
        bad = q[(q < 0) | (q >= n)][0]
        raise IndexError(f"row index {bad} out of range for {n} nodes")
    return q


def _segment_positions(starts, lens):
    """Concatenated ``arange(starts[k], starts[k] + lens[k])`` over ``k``."""
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offs = np.repeat(starts - np.cumsum(np.r_[0, lens[:-1]]), lens)
    return offs + np.arange(total)


def gather_rows(p: Laplacian, q: np.ndarray):
    """Raw CSR arrays ``(indptr, indices, data)`` of ``QP`` for validated ``q``."""
    starts = p.row_ptr[q]
    lens = p.row_ptr[q + 1] - starts
    pos = _segment_positions(starts, lens)
    indptr = np.zeros(q.size + 1, dtype=np.int64)
    np.cumsum(lens, out=indptr[1:])
    return indptr, p.col_idx[pos], p.values[pos]


def restrict_columns(indptr, indices, data, nodes, weights, n: int):
    """Keep columns ``nodes`` (sorted, distinct), scale column ``nodes[k]`` by ``weights[k]``.

    Returns CSR arrays whose column ids are positions in ``nodes``.
    """
    where = np.full(n, -1, dtype=np.int64)
    where[nodes] = np.arange(nodes.size)
    local = where[indices]
    keep = local >= 0
    rows = np.repeat(np.arange(indptr.size - 1), np.diff(indptr))[keep]
    new_ptr = np.zeros(indptr.size, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=indptr.size - 1), out=new_ptr[1:])
    local = local[keep]
    return new_ptr, local, data[keep] * weights[local]


def csr_from_arrays(indptr, indices, data, shape) -> sp.csr_matrix:
    m = sp.csr_matrix((data, indices, indptr), shape=shape)
    m.has_sorted_indices = True
    return m


def select_rows(p: Laplacian, selected) -> sp.csr_matrix:
    """``QP``: row ``k`` is row ``selected[k]`` of ``P``; duplicates repeat."""
    q = _check_rows(p.num_nodes, selected)
    indptr, indices, data = gather_rows(p, q)
    return csr_from_arrays(indptr, indices, data, (q.size, p.num_nodes))


def column_sq_norms(sub: sp.spmatrix) -> np.ndarray:
    """Squared 2-norm of every column of a row-selected block ``QP``."""
    sub = sp.csr_matrix(sub)
    return np.bincount(sub.indices, weights=sub.data ** 2, minlength=sub.shape[1])


def neighbor_union(g: SparseGraph, nodes) -> np.ndarray:
    """Sorted closed-neighborhood union ``N[S]``; each node counts as its own neighbor."""
    s = _check_rows(g.num_nodes, nodes)
    if s.size == 0:
        return np.empty(0, dtype=np.int64)
    s = np.unique(s)
    starts = g.row_ptr[s]
    idx = _segment_positions(starts, g.row_ptr[s + 1] - starts)
    return np.union1d(s, g.col_idx[idx])
