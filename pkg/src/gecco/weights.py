"""Fusion-weight graphs, mixed-data distances, and feature weights.

Fusion weights are sparse: a pair enters the edge set only when its weight is
positive.  Graphs are built from a distance matrix by k-nearest-neighbour
masks with either an exponential kernel or symmetrized conditional
(neighbour-embedding) probabilities.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree

from . import core


@dataclass(frozen=True)
class WeightGraph:
    """Sparse edge list over sample pairs with positive fusion weights."""

    edges: np.ndarray  # (m, 2) integer pairs with l1 < l2, lexicographic
    weights: np.ndarray  # (m,) positive weights
    n: int

    def __post_init__(self) -> None:
        edges = np.asarray(self.edges, dtype=int).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if edges.shape[0] != weights.shape[0]:
            raise ValueError("edges and weights must have equal length")
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n:
                raise ValueError("edge indices out of range")
            if np.any(edges[:, 0] >= edges[:, 1]):
                raise ValueError("edges must satisfy l1 < l2")
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            weights = weights[order]
            if np.any((np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)):
                raise ValueError("duplicate edges")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and > 0")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "weights", weights)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    def adjacency(self):
        m = self.n_edges
        return coo_matrix(
            (self.weights, (self.edges[:, 0], self.edges[:, 1])),
            shape=(self.n, self.n),
        )

    def is_connected(self) -> bool:
        ncomp, _ = connected_components(self.adjacency(), directed=False)
        return ncomp == 1


def _row_distance(spec: core.LossSpec, X: np.ndarray) -> np.ndarray:
    """Pairwise dissimilarity matching the view's loss.

    Distance losses use their own metric; likelihood and deviance losses use
    the symmetrized unit deviance of the matching family, which is zero at
    equality and nonnegative.
    """
    kind = spec.kind
    diffs = X[:, None, :] - X[None, :, :]
    if kind == "euclidean":
        return np.linalg.norm(diffs, axis=2)
    if kind in ("manhattan", "hinge"):
        return np.abs(diffs).sum(axis=2)
    if kind == "chebychev":
        return np.abs(diffs).max(axis=2)
    if kind == "minkowski":
        return np.linalg.norm(diffs, ord=spec.q, axis=2)
    logs = np.log(np.maximum(X, core.EPS))
    if kind in ("poisson_ll", "poisson_dev"):
        return np.einsum("ijk->ij", diffs * (logs[:, None, :] - logs[None, :, :]))
    if kind in ("negbin_ll", "negbin_dev"):
        shifted = np.log(spec.dispersion + X)
        term = (logs[:, None, :] - logs[None, :, :]) - (
            shifted[:, None, :] - shifted[None, :, :]
        )
        return np.einsum("ijk->ij", diffs * term)
    if kind in ("bernoulli_ll", "binomial_dev"):
        lo = np.log(np.maximum(X, core.EPS)) - np.log(np.maximum(1 - X, core.EPS))
        return np.einsum("ijk->ij", diffs * (lo[:, None, :] - lo[None, :, :]))
    # multinomial_ll: symmetrized multinomial deviance over indicator columns
    return np.einsum("ijk->ij", diffs * (logs[:, None, :] - logs[None, :, :]))


def _gower_terms(X: np.ndarray) -> np.ndarray:
    """Range-normalized absolute differences, summed over a view's features."""
    ranges = X.max(axis=0) - X.min(axis=0)
    safe = np.where(ranges > 0, ranges, 1.0)
    scaled = X / safe
    d = np.abs(scaled[:, None, :] - scaled[None, :, :])
    d[:, :, ranges == 0] = 0.0
    return d.sum(axis=2)


def pairwise_distance(dataset: core.MultiViewDataset, metric: str = "gower") -> np.ndarray:
    """Symmetric n x n distance matrix.

    ``per_loss`` uses the single view's own loss family as the metric;
    ``gower`` averages range-normalized feature differences over all views.
    """
    if metric == "per_loss":
        if dataset.n_views != 1:
            raise ValueError("per_loss distance requires a single view")
        view = dataset.views[0]
        d = _row_distance(view.loss, view.data)
    elif metric == "gower":
        total = sum(dataset.widths)
        d = sum(_gower_terms(v.data) for v in dataset.views) / total
    else:
        raise ValueError(f"unknown metric {metric!r}")
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def weighted_gower_distance(
    dataset: core.MultiViewDataset,
    u_hats,
    centers,
    loss_weights,
) -> np.ndarray:
    """Gower distance reweighted by fitted feature activity and view scale.

    Each feature term is scaled by its column's deviation from the
    loss-specific center in the fitted estimate (normalized to the view's
    maximum) and by the view's null deviance (the inverse loss weight).
    """
    n = dataset.n
    d = np.zeros((n, n))
    for view, u_hat, ct, pi in zip(dataset.views, u_hats, centers, loss_weights):
        X = view.data
        ranges = X.max(axis=0) - X.min(axis=0)
        safe = np.where(ranges > 0, ranges, 1.0)
        activity = np.linalg.norm(u_hat - ct, axis=0)
        amax = activity.max()
        if amax <= 0:
            continue
        feat_w = (activity / amax) / safe
        feat_w[ranges == 0] = 0.0
        scaled = X * feat_w
        d += np.abs(scaled[:, None, :] - scaled[None, :, :]).sum(axis=2) / pi
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def default_phi(d: np.ndarray) -> float:
    """Scale-free kernel width: the inverse median nonzero distance."""
    vals = d[np.triu_indices_from(d, k=1)]
    vals = vals[vals > 0]
    if vals.size == 0:
        return 1.0
    return 1.0 / float(np.median(vals))


def _knn_mask(d: np.ndarray, k: int) -> np.ndarray:
    """Symmetric-OR k-nearest-neighbour indicator; ties prefer smaller index."""
    n = d.shape[0]
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}]")
    mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        order = np.argsort(d[i], kind="stable")
        neigh = [j for j in order if j != i][:k]
        mask[i, neigh] = True
    return mask | mask.T


def _graph_from_dense(w: np.ndarray, n: int) -> WeightGraph:
    iu, ju = np.triu_indices(n, k=1)
    keep = w[iu, ju] > 0
    return WeightGraph(
        edges=np.column_stack([iu[keep], ju[keep]]),
        weights=w[iu, ju][keep],
        n=n,
    )


def knn_kernel_weights(d: np.ndarray, k: int, phi: float) -> WeightGraph:
    """Exponential-kernel weights exp(-phi * d) on the kNN mask."""
    d = np.asarray(d, dtype=float)
    mask = _knn_mask(d, k)
    w = np.where(mask, np.exp(-phi * d), 0.0)
    return _graph_from_dense(w, d.shape[0])


def sne_weights(d: np.ndarray, k: int, phi: float) -> WeightGraph:
    """Symmetrized conditional-probability weights on the kNN mask.

    Row i's conditional distribution is exp(-phi d_ij) normalized over
    j != i; the pair weight is the symmetrized probability divided by 2n.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    kernel = np.exp(-phi * d)
    np.fill_diagonal(kernel, 0.0)
    row_sums = kernel.sum(axis=1, keepdims=True)
    if np.any(row_sums <= 0):
        raise ValueError("degenerate distances: a sample has no finite neighbour")
    cond = kernel / row_sums
    p = (cond + cond.T) / (2.0 * n)
    w = np.where(_knn_mask(d, k), p, 0.0)
    return _graph_from_dense(w, n)


def ensure_connected(graph: WeightGraph, d: np.ndarray) -> WeightGraph:
    """Augment a disconnected graph with minimum-spanning-tree edges.

    Full fusion to a single center needs a connected graph; missing edges are
    added at the smallest retained weight, with a warning.
    """
    if graph.is_connected():
        return graph
    warnings.warn(
        "fusion-weight graph is disconnected; augmenting with spanning-tree edges",
        stacklevel=2,
    )
    n = graph.n
    mst = minimum_spanning_tree(np.asarray(d, dtype=float)).tocoo()
    fill = graph.weights.min() if graph.n_edges else 1.0
    have = {tuple(e) for e in graph.edges}
    new_edges = list(graph.edges)
    new_weights = list(graph.weights)
    for i, j in zip(mst.row, mst.col):
        a, b = (int(i), int(j)) if i < j else (int(j), int(i))
        if (a, b) not in have:
            have.add((a, b))
            new_edges.append((a, b))
            new_weights.append(fill)
    return WeightGraph(np.array(new_edges), np.array(new_weights), n)


def build_weight_graph(
    d: np.ndarray,
    kind: str = "knn",
    k: int | None = None,
    phi: float | None = None,
    connect: bool = True,
) -> WeightGraph:
    """Weight graph from a distance matrix with the default heuristics."""
    n = d.shape[0]
    if k is None:
        k = min(5, n - 1)
    if phi is None:
        phi = default_phi(d)
    if kind == "knn":
        graph = knn_kernel_weights(d, k, phi)
    elif kind == "sne":
        graph = sne_weights(d, k, phi)
    else:
        raise ValueError(f"unknown weight kind {kind!r}")
    if connect:
        graph = ensure_connected(graph, d)
    return graph


def adaptive_feature_weights(u_hats, centers) -> tuple:
    """Feature weights 1 / (1 + column deviation from the center)."""
    out = []
    for u_hat, ct in zip(u_hats, centers):
        dev = np.linalg.norm(np.asarray(u_hat) - np.asarray(ct), axis=0)
        out.append(1.0 / (1.0 + dev))
    return tuple(out)
