"""Directed difference operator over the fusion edge set.

The operator maps centroid rows to edgewise differences; its Gram matrix is
an (unweighted) graph Laplacian, shifted copies of which are factorized once
and reused by every solver step.
"""
from __future__ import annotations

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import cg

from .weights import WeightGraph

# Dense Cholesky below this sample count, conjugate gradients above.
DENSE_LIMIT = 2000
CG_RTOL = 1e-10
RESIDUAL_TOL = 1e-8


class DifferenceOperator:
    """Applies D (edge differences), its adjoint, and shifted-Laplacian solves.

    Immutable after construction; factorizations are cached per shift and are
    safe to reuse across calls.
    """

    def __init__(self, graph: WeightGraph):
        self.graph = graph
        n, m = graph.n, graph.n_edges
        rows = np.repeat(np.arange(m), 2)
        cols = graph.edges.reshape(-1)
        data = np.tile([1.0, -1.0], m)
        self._d = sparse.csr_matrix((data, (rows, cols)), shape=(m, n))
        self._dt = self._d.T.tocsr()
        self._dtd = self._dt @ self._d
        self._dense = n <= DENSE_LIMIT
        if self._dense:
            self._dtd_dense = self._dtd.toarray()
        self._factor_cache: dict = {}

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def n_edges(self) -> int:
        return self.graph.n_edges

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Row differences: output row l is u[l1] - u[l2]."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.n:
            raise ValueError(f"expected {self.n} rows, got {u.shape[0]}")
        return self._d @ u

    def apply_t(self, m: np.ndarray) -> np.ndarray:
        """Adjoint: scatter edge rows back to samples."""
        m = np.asarray(m, dtype=float)
        if m.shape[0] != self.n_edges:
            raise ValueError(f"expected {self.n_edges} rows, got {m.shape[0]}")
        return self._dt @ m

    def gram(self) -> np.ndarray:
        return self._dtd_dense if self._dense else self._dtd.toarray()

    def solve_shifted(self, c: float, b: np.ndarray) -> np.ndarray:
        """Solve (D^T D + c I) x = b for c > 0."""
        if not c > 0:
            raise ValueError("shift must be positive")
        b = np.asarray(b, dtype=float)
        if self._dense:
            if c not in self._factor_cache:
                self._factor_cache[c] = cho_factor(
                    self._dtd_dense + c * np.eye(self.n), lower=True
                )
            return cho_solve(self._factor_cache[c], b)
        return self._solve_cg(c, b)

    def _solve_cg(self, c: float, b: np.ndarray) -> np.ndarray:
        op = self._dtd + c * sparse.identity(self.n, format="csr")
        b2 = b if b.ndim == 2 else b[:, None]
        out = np.empty_like(b2)
        for j in range(b2.shape[1]):
            x, info = cg(op, b2[:, j], rtol=CG_RTOL, atol=0.0)
            if info != 0:
                raise RuntimeError(f"conjugate gradient failed (info={info})")
            out[:, j] = x
        resid = np.linalg.norm(op @ out - b2)
        if resid > RESIDUAL_TOL * max(np.linalg.norm(b2), 1e-30):
            raise RuntimeError("shifted-Laplacian solve exceeded residual tolerance")
        return out if b.ndim == 2 else out[:, 0]


def extract_clusters(v: np.ndarray, graph: WeightGraph, tol: float) -> np.ndarray:
    """Cluster labels from fused difference rows.

    Samples joined by an edge whose difference row has norm <= tol share a
    label; labels are assigned in order of each component's smallest member.
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    v = np.asarray(v, dtype=float)
    n = graph.n
    fused = np.linalg.norm(v, axis=1) <= tol if graph.n_edges else np.zeros(0, bool)
    edges = graph.edges[fused]
    adj = sparse.coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    _, raw = connected_components(adj, directed=False)
    labels = np.empty(n, dtype=int)
    seen: dict = {}
    for i in range(n):
        labels[i] = seen.setdefault(raw[i], len(seen))
    return labels


def selected_features(u_views, centers, tol: float):
    """Per-view masks of columns not shrunk to their loss-specific centers."""
    masks = []
    for u, ct in zip(u_views, centers):
        dev = np.linalg.norm(np.asarray(u) - np.asarray(ct), axis=0)
        masks.append(dev > tol)
    return tuple(masks)


def fusion_tolerance(views) -> float:
    """Default scale-aware threshold for calling a difference row fused."""
    scale = max(float(np.abs(v.data).max()) for v in views)
    return 1e-6 * (1.0 + scale)
