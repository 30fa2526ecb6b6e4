import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import brute_edge_homophily, brute_node_homophily, graphs, graphs_with_labels
from spgcl.errors import ShapeError, SpgclError
from spgcl.graph import (Graph, edge_homophily, k_hop_nodes, node_homophily, normalized_adjacency,
                         sym_laplacian)


def path(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle4():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def test_from_edges_drops_loops_and_duplicates():
    g = Graph.from_edges(3, [(0, 1), (1, 0), (0, 1), (2, 2)])
    assert g.num_edges == 1
    assert g.edges.tolist() == [[0, 1]]
    assert g.degrees().tolist() == [1, 1, 0]


def test_from_edges_rejects_out_of_range():
    with pytest.raises(ShapeError):
        Graph.from_edges(2, [(0, 2)])


@given(graphs())
def test_storage_invariants(g):
    a = g.adjacency()
    assert np.array_equal(a, a.T)
    assert np.all(np.diag(a) == 0)
    assert set(np.unique(a)) <= {0.0, 1.0}
    assert np.array_equal(g.degrees(), a.sum(axis=1))
    for v in range(g.num_nodes):
        assert all(g.has_edge(v, u) and g.has_edge(u, v) for u in g.neighbors(v))


def test_edge_homophily_examples():
    assert edge_homophily(Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)]), [0, 0, 0]) == 1.0
    assert edge_homophily(cycle4(), [0, 0, 1, 1]) == 0.5


def test_node_homophily_examples():
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert node_homophily(star, [0, 0, 0, 0]) == 1.0
    assert node_homophily(cycle4(), [0, 0, 1, 1]) == 0.5


def test_homophily_errors():
    with pytest.raises(SpgclError, match="no edges"):
        edge_homophily(Graph.empty(3), [0, 1, 0])
    with pytest.raises(SpgclError):
        node_homophily(Graph.empty(3), [0, 1, 0])


def test_node_homophily_skips_isolated_nodes():
    g = Graph.from_edges(3, [(0, 1)])
    assert node_homophily(g, [0, 0, 1]) == 1.0


@given(graphs_with_labels())
def test_homophily_matches_loops(gy):
    g, y = gy
    edges = g.edges.tolist()
    if edges:
        assert 0.0 <= edge_homophily(g, y) <= 1.0
        assert math.isclose(edge_homophily(g, y), brute_edge_homophily(edges, y), abs_tol=1e-12)
        assert 0.0 <= node_homophily(g, y) <= 1.0
        assert math.isclose(node_homophily(g, y), brute_node_homophily(g.num_nodes, edges, y), abs_tol=1e-12)


def test_normalized_adjacency_examples():
    assert normalized_adjacency(Graph.empty(1)).tolist() == [[1.0]]
    assert np.allclose(normalized_adjacency(path(2)), 0.5)
    assert math.isclose(normalized_adjacency(path(3))[0, 1], 1 / math.sqrt(6), rel_tol=1e-14)


def test_sym_laplacian_examples():
    assert sym_laplacian(Graph.empty(1)).tolist() == [[0.0]]
    assert np.allclose(sym_laplacian(path(2)), [[0.5, -0.5], [-0.5, 0.5]])
    k3 = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert np.allclose(np.linalg.eigvalsh(sym_laplacian(k3, "sym")), [0.0, 1.5, 1.5])


def test_sym_mode_rejects_isolated_nodes():
    with pytest.raises(SpgclError, match="zero degree"):
        normalized_adjacency(Graph.from_edges(3, [(0, 1)]), "sym")


@given(graphs())
def test_laplacian_symmetric_with_zero_bottom(g):
    lap = sym_laplacian(g)
    assert np.allclose(lap, lap.T, atol=1e-14)
    assert abs(np.linalg.eigvalsh(lap)[0]) <= 1e-8


@given(graphs())
def test_row_normalization_sums_to_one(g):
    assert np.allclose(normalized_adjacency(g, "row").sum(axis=1), 1.0, atol=1e-12)


@given(graphs(min_nodes=10, max_nodes=10), st.randoms(use_true_random=False))
def test_permutation_equivariance(g, rnd):
    perm = np.array(rnd.sample(range(10), 10))
    h = g.permute(perm)
    p = np.eye(10)[:, perm]  # P[perm[i], i] = 1 sends node i to perm[i]
    for mode in ("sym_selfloop", "row"):
        assert np.allclose(normalized_adjacency(h, mode), p @ normalized_adjacency(g, mode) @ p.T)
    assert np.allclose(sym_laplacian(h), p @ sym_laplacian(g) @ p.T)


def test_sparse_and_dense_agree():
    g = path(5)
    assert np.allclose(normalized_adjacency(g, sparse=True).toarray(), normalized_adjacency(g))


def test_k_hop_nodes_on_path():
    g = path(5)
    assert k_hop_nodes(g, [0], 2).tolist() == [0, 1, 2]
    assert k_hop_nodes(g, [0], 10).tolist() == [0, 1, 2, 3, 4]
    assert k_hop_nodes(Graph.empty(3), [1], 1).tolist() == [1]
