import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ladies.errors import GraphError
from ladies.graph import (build_graph, column_sq_norms, neighbor_union, normalized_laplacian,
                          select_rows)

from oracles import closed_union, dense_laplacian, random_edges


def test_single_edge():
    g = build_graph([(0, 1)], 2)
    assert g.row_ptr.tolist() == [0, 1, 2]
    assert g.col_idx.tolist() == [1, 0]


def test_duplicates_and_self_loops_dropped():
    g = build_graph([(0, 1), (1, 0), (0, 0)], 2)
    assert g.row_ptr.tolist() == [0, 1, 2]
    assert g.col_idx.tolist() == [1, 0]


def test_path_degree():
    g = build_graph([(0, 1), (1, 2)], 3)
    assert g.degrees().tolist() == [1, 2, 1]


def test_out_of_range_edge_named():
    with pytest.raises(GraphError, match=r"edge #1 \(2, 5\)"):
        build_graph([(0, 1), (2, 5)], 3)


def test_empty_graph():
    g = build_graph([], 4)
    assert g.num_edges == 0
    p = normalized_laplacian(g)
    np.testing.assert_array_equal(p.toarray(), np.eye(4))


@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=40), st.randoms())
@settings(max_examples=60, deadline=None)
def test_input_order_irrelevant(edges, rnd):
    g1 = build_graph(edges, 10)
    shuffled = [(v, u) if rnd.random() < 0.5 else (u, v) for u, v in edges]
    rnd.shuffle(shuffled)
    g2 = build_graph(shuffled, 10)
    g1.validate()
    np.testing.assert_array_equal(g1.row_ptr, g2.row_ptr)
    np.testing.assert_array_equal(g1.col_idx, g2.col_idx)


def test_two_node_laplacian():
    p = normalized_laplacian(build_graph([(0, 1)], 2))
    np.testing.assert_array_equal(p.toarray(), np.full((2, 2), 0.5))


def test_isolated_node():
    p = normalized_laplacian(build_graph([], 1))
    assert p.toarray().tolist() == [[1.0]]


def test_laplacian_matches_dense_oracle_small_graphs():
    rng = np.random.default_rng(0)
    for trial in range(150):
        n = int(rng.integers(1, 13))
        edges = random_edges(n, rng.uniform(0, 0.7), rng)
        g = build_graph(edges, n)
        p = normalized_laplacian(g)
        want = dense_laplacian(n, edges)
        np.testing.assert_allclose(p.toarray(), want, rtol=0, atol=1e-15)
        # invariants of the cached quantities
        assert np.all(p.toarray().diagonal() > 0)
        np.testing.assert_allclose(p.frob_sq, np.sum(want ** 2), rtol=1e-9)
        np.testing.assert_allclose(p.col_sq_norms, np.sum(want ** 2, axis=0), rtol=1e-9)
        dense = p.toarray()
        assert np.array_equal(dense, dense.T)


def test_laplacian_is_read_only(er100):
    _, p = er100
    with pytest.raises(ValueError):
        p.values[0] = 2.0


def test_select_rows_identity_and_duplicates(er100):
    _, p = er100
    full = select_rows(p, np.arange(p.num_nodes))
    assert (full != p.matrix).nnz == 0
    dup = select_rows(p, [3, 3]).toarray()
    np.testing.assert_array_equal(dup[0], dup[1])
    with pytest.raises(IndexError):
        select_rows(p, [p.num_nodes])


def test_select_rows_path_oracle(rng):
    edges = [(0, 1), (1, 2)]
    p = normalized_laplacian(build_graph(edges, 3))
    dense = dense_laplacian(3, edges)
    for _ in range(20):
        q = rng.integers(0, 3, size=int(rng.integers(1, 6)))
        np.testing.assert_allclose(select_rows(p, q).toarray(), dense[q], atol=1e-15)


def test_column_sq_norms():
    edges = [(0, i) for i in range(1, 5)]
    p = normalized_laplacian(build_graph(edges, 6))  # node 5 isolated
    one = column_sq_norms(select_rows(p, [2]))
    np.testing.assert_allclose(one, p.toarray()[2] ** 2)
    np.testing.assert_allclose(column_sq_norms(select_rows(p, range(6))), p.col_sq_norms,
                               rtol=1e-9)
    centre = column_sq_norms(select_rows(p, [0]))
    assert np.flatnonzero(centre).tolist() == [0, 1, 2, 3, 4]


def test_neighbor_union_examples():
    path = build_graph([(0, 1), (1, 2)], 3)
    assert neighbor_union(path, []).tolist() == []
    assert neighbor_union(path, [1]).tolist() == [0, 1, 2]
    star = build_graph([(0, i) for i in range(1, 5)], 5)
    assert neighbor_union(star, [3]).tolist() == [0, 3]


def test_neighbor_union_matches_oracle(rng):
    for _ in range(100):
        n = int(rng.integers(1, 15))
        edges = random_edges(n, 0.25, rng)
        g = build_graph(edges, n)
        nodes = rng.choice(n, size=int(rng.integers(0, n + 1)), replace=False)
        assert neighbor_union(g, nodes).tolist() == closed_union(n, edges, nodes.tolist())
