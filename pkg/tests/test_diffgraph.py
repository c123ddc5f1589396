"""Difference operator, shifted-Laplacian solves, cluster extraction."""
import numpy as np
import pytest

from gecco import diffgraph
from gecco.diffgraph import DifferenceOperator, extract_clusters, selected_features
from gecco.weights import WeightGraph


def chain_graph(n):
    edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return WeightGraph(edges, np.ones(n - 1), n)


def dense_d(graph):
    d = np.zeros((graph.n_edges, graph.n))
    for l, (i, j) in enumerate(graph.edges):
        d[l, i] = 1.0
        d[l, j] = -1.0
    return d


def test_apply_constant_rows_zero():
    g = chain_graph(4)
    op = DifferenceOperator(g)
    u = np.tile([1.0, -2.0], (4, 1))
    assert np.allclose(op.apply(u), 0.0)


def test_apply_single_edge():
    g = WeightGraph(np.array([[0, 1]]), np.array([1.0]), 2)
    op = DifferenceOperator(g)
    out = op.apply(np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert np.array_equal(out, [[1.0, -1.0]])


def test_apply_then_adjoint_matches_dense_oracle():
    rng = np.random.default_rng(0)
    for n in (5, 12, 20):
        pts = rng.normal(size=(n, 2))
        d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
        from gecco.weights import knn_kernel_weights

        g = knn_kernel_weights(d, 3, 1.0)
        op = DifferenceOperator(g)
        dd = dense_d(g)
        u = rng.normal(size=(n, 4))
        assert np.allclose(op.apply(u), dd @ u)
        assert np.allclose(op.apply_t(op.apply(u)), dd.T @ dd @ u, atol=1e-12)


def test_apply_shape_check():
    op = DifferenceOperator(chain_graph(3))
    with pytest.raises(ValueError):
        op.apply(np.zeros((4, 2)))


def test_solve_empty_edge_set():
    g = WeightGraph(np.zeros((0, 2)), np.zeros(0), 3)
    op = DifferenceOperator(g)
    b = np.arange(6, dtype=float).reshape(3, 2)
    assert np.allclose(op.solve_shifted(2.0, b), b / 2.0)


def test_solve_two_sample_analytic():
    # (D^T D + 2I) = [[3, -1], [-1, 3]]; inverse = (1/8) [[3, 1], [1, 3]].
    g = WeightGraph(np.array([[0, 1]]), np.array([1.0]), 2)
    op = DifferenceOperator(g)
    got = op.solve_shifted(2.0, np.eye(2))
    assert np.allclose(got, np.array([[3.0, 1.0], [1.0, 3.0]]) / 8.0)


def test_solve_residual_bound():
    rng = np.random.default_rng(1)
    g = chain_graph(15)
    op = DifferenceOperator(g)
    b = rng.normal(size=(15, 3))
    for c in (0.5, 2.0, 7.0):
        x = op.solve_shifted(c, b)
        resid = (op.gram() + c * np.eye(15)) @ x - b
        assert np.linalg.norm(resid) <= 1e-8 * np.linalg.norm(b)


def test_solve_rejects_nonpositive_shift():
    op = DifferenceOperator(chain_graph(3))
    with pytest.raises(ValueError):
        op.solve_shifted(0.0, np.zeros((3, 1)))


# ---- cluster extraction --------------------------------------------------


def test_extract_all_fused():
    g = chain_graph(5)
    v = np.zeros((4, 3))
    labels = extract_clusters(v, g, 1e-8)
    assert np.array_equal(labels, np.zeros(5, dtype=int))


def test_extract_none_fused():
    g = chain_graph(5)
    v = np.ones((4, 3))
    labels = extract_clusters(v, g, 1e-8)
    assert np.array_equal(labels, np.arange(5))


def test_extract_chain_partial():
    # chain a-b-c with only edge (a, b) fused
    g = chain_graph(3)
    v = np.array([[0.0, 0.0], [5.0, 0.0]])
    labels = extract_clusters(v, g, 1e-6)
    assert np.array_equal(labels, [0, 0, 1])


def test_extract_invariant_to_edge_order():
    # The graph canonicalizes its edge list, so any input ordering yields the
    # same row layout and hence the same extraction.
    rng = np.random.default_rng(2)
    edges = np.array([[0, 1], [1, 2], [2, 3], [0, 3], [1, 3]])
    v = np.array([[0.0], [1.0], [0.0], [1.0], [0.0]])
    perm = rng.permutation(5)
    g1 = WeightGraph(edges, np.ones(5), 4)
    g2 = WeightGraph(edges[perm], np.ones(5), 4)
    assert np.array_equal(g1.edges, g2.edges)
    assert np.array_equal(extract_clusters(v, g1, 1e-9), extract_clusters(v, g2, 1e-9))


def test_extract_canonical_labels():
    g = WeightGraph(np.array([[0, 3], [1, 2]]), np.ones(2), 4)
    v = np.zeros((2, 2))
    labels = extract_clusters(v, g, 1e-9)
    # component of sample 0 gets id 0, component of sample 1 gets id 1
    assert np.array_equal(labels, [0, 1, 1, 0])


# ---- selected features ---------------------------------------------------


def test_selected_none_at_centers():
    ct = np.tile([1.0, 2.0], (4, 1))
    masks = selected_features([ct.copy()], [ct], 1e-6)
    assert not masks[0].any()


def test_selected_single_offset_entry():
    ct = np.zeros((4, 3))
    u = ct.copy()
    u[2, 1] = 1.0
    masks = selected_features([u], [ct], 1e-6)
    assert np.array_equal(masks[0], [False, True, False])


def test_selected_tol_dominates():
    ct = np.zeros((4, 2))
    u = ct + 0.001
    masks = selected_features([u], [ct], 10.0)
    assert not masks[0].any()
