"""Loss catalog, loss-specific centers, and multi-view dataset types.

Each data view carries one convex loss.  Losses are evaluated entrywise
(deviance and log-likelihood losses), rowwise (distance losses), or per
feature block (multinomial on the expanded indicator representation).
Every loss has a per-feature center: the value a column collapses to when
the fusion or feature-selection penalty is pushed far enough.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize, special

# Clamp for log / logit / deviance arguments; these losses are undefined at 0.
EPS = 1e-10

LOSS_KINDS = (
    "euclidean",
    "manhattan",
    "minkowski",
    "chebychev",
    "poisson_ll",
    "poisson_dev",
    "negbin_ll",
    "negbin_dev",
    "bernoulli_ll",
    "binomial_dev",
    "multinomial_ll",
    "hinge",
)

DIFFERENTIABLE_KINDS = frozenset(
    (
        "euclidean",
        "poisson_ll",
        "poisson_dev",
        "negbin_ll",
        "negbin_dev",
        "bernoulli_ll",
        "binomial_dev",
        "multinomial_ll",
    )
)

# Rowwise norms of the residual X - U.
DISTANCE_KINDS = frozenset(("euclidean", "manhattan", "minkowski", "chebychev"))

# Norm-of-residual losses with no entrywise decomposition.
ROWNORM_KINDS = frozenset(("minkowski", "chebychev"))


@dataclass(frozen=True)
class LossSpec:
    """Tagged loss descriptor.

    ``q`` is the Minkowski exponent (> 1), ``dispersion`` the negative-binomial
    size parameter theta (> 0), ``classes`` the multinomial class count (>= 2).
    Each parameter must be present exactly when its kind requires it.
    """

    kind: str
    q: Optional[float] = None
    dispersion: Optional[float] = None
    classes: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if (self.kind == "minkowski") != (self.q is not None):
            raise ValueError("q is required by minkowski and only by minkowski")
        if self.q is not None and not self.q > 1:
            raise ValueError("minkowski exponent q must be > 1")
        needs_disp = self.kind in ("negbin_ll", "negbin_dev")
        if needs_disp != (self.dispersion is not None):
            raise ValueError("dispersion is required exactly for negbin losses")
        if self.dispersion is not None and not self.dispersion > 0:
            raise ValueError("dispersion must be > 0")
        if (self.kind == "multinomial_ll") != (self.classes is not None):
            raise ValueError("classes is required exactly for multinomial_ll")
        if self.classes is not None and self.classes < 2:
            raise ValueError("multinomial class count must be >= 2")

    @property
    def differentiable(self) -> bool:
        return self.kind in DIFFERENTIABLE_KINDS

    @property
    def distance_based(self) -> bool:
        return self.kind in DISTANCE_KINDS or self.kind == "hinge"


@dataclass(frozen=True)
class View:
    """One data view: an n x p matrix plus the loss used to fit it."""

    data: np.ndarray
    loss: LossSpec
    feature_names: Optional[tuple] = None

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("view data must be a nonempty 2-d matrix")
        if not np.all(np.isfinite(data)):
            raise ValueError("view data must be finite")
        kind = self.loss.kind
        if kind in ("bernoulli_ll", "binomial_dev"):
            if data.min() < 0 or data.max() > 1:
                raise ValueError(f"{kind} view entries must lie in [0, 1]")
        elif kind == "hinge":
            if not np.all(np.isin(data, (-1.0, 1.0))):
                raise ValueError("hinge view entries must be in {-1, +1}")
        elif kind in ("poisson_ll", "poisson_dev", "negbin_ll", "negbin_dev"):
            if data.min() < 0:
                raise ValueError(f"{kind} view entries must be nonnegative")
        elif kind == "multinomial_ll":
            k = self.loss.classes
            if data.shape[1] % k != 0:
                raise ValueError("multinomial view width must be classes * p")
            p = data.shape[1] // k
            block_sums = data.reshape(data.shape[0], k, p).sum(axis=1)
            if not np.allclose(block_sums, 1.0, atol=1e-8):
                raise ValueError("multinomial class blocks must sum to 1")
        if self.feature_names is not None and len(self.feature_names) != data.shape[1]:
            raise ValueError("feature_names length must match view width")

    @property
    def n_features(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MultiViewDataset:
    """K data views sharing n samples."""

    views: tuple

    def __post_init__(self) -> None:
        views = tuple(
            v if isinstance(v, View) else View(v[0], v[1]) for v in self.views
        )
        object.__setattr__(self, "views", views)
        if not views:
            raise ValueError("dataset needs at least one view")
        n = views[0].data.shape[0]
        if n < 2:
            raise ValueError("dataset needs at least 2 samples")
        if any(v.data.shape[0] != n for v in views):
            raise ValueError("all views must share the sample count")

    @classmethod
    def of(cls, *pairs) -> "MultiViewDataset":
        return cls(tuple(pairs))

    @property
    def n(self) -> int:
        return self.views[0].data.shape[0]

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def widths(self) -> tuple:
        return tuple(v.n_features for v in self.views)


@dataclass(frozen=True)
class Penalties:
    """Tuning parameters and weights of the clustering objective.

    ``fusion_weights`` is a WeightGraph over sample pairs, ``feature_weights``
    one nonnegative vector per view (None means uniform), ``loss_weights`` one
    positive scalar per view (None means null-deviance weights, computed by
    the solver).
    """

    gamma: float
    alpha: float
    fusion_weights: "object"
    feature_weights: Optional[tuple] = None
    loss_weights: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if not (np.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError("gamma must be finite and >= 0")
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and >= 0")
        if self.feature_weights is not None:
            fw = tuple(np.asarray(z, dtype=float) for z in self.feature_weights)
            object.__setattr__(self, "feature_weights", fw)
            for z in fw:
                if not np.all(np.isfinite(z)) or z.min() < 0:
                    raise ValueError("feature weights must be finite, >= 0")
        if self.loss_weights is not None:
            lw = np.asarray(self.loss_weights, dtype=float)
            object.__setattr__(self, "loss_weights", lw)
            if not np.all(np.isfinite(lw)) or lw.min() <= 0:
                raise ValueError("loss weights must be finite and > 0")


def _check_shapes(X: np.ndarray, U: np.ndarray) -> None:
    if X.shape != U.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {U.shape}")


def _multinomial_cells(spec: LossSpec, X, U):
    """Per (sample, original feature) multinomial contributions, n x p."""
    n, width = X.shape
    k = spec.classes
    p = width // k
    Xb = X.reshape(n, k, p)
    Ub = U.reshape(n, k, p)
    lse = special.logsumexp(Ub, axis=1)
    return lse - np.sum(Xb * Ub, axis=1)


def _entry_loss(spec: LossSpec, X: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Entrywise contributions for entrywise-decomposable kinds."""
    kind = spec.kind
    if kind == "euclidean":
        return 0.5 * (X - U) ** 2
    if kind == "manhattan":
        return np.abs(X - U)
    if kind == "poisson_ll":
        with np.errstate(over="ignore"):
            return -X * U + np.exp(U)
    if kind == "poisson_dev":
        Uc = np.maximum(U, EPS)
        return -X * np.log(Uc) + Uc
    if kind == "negbin_ll":
        theta = spec.dispersion
        return -X * U + (X + theta) * np.logaddexp(np.log(theta), U)
    if kind == "negbin_dev":
        theta = spec.dispersion
        Uc = np.maximum(U, EPS)
        xlogx = special.xlogy(X, X) - special.xlogy(X, Uc)
        return xlogx - (X + theta) * (np.log(theta + X) - np.log(theta + Uc))
    if kind == "bernoulli_ll":
        return -X * U + np.logaddexp(0.0, U)
    if kind == "binomial_dev":
        Uc = np.clip(U, EPS, 1.0 - EPS)
        return -special.xlogy(X, Uc) - special.xlogy(1.0 - X, 1.0 - Uc)
    if kind == "hinge":
        return np.maximum(0.0, 1.0 - X * U)
    raise ValueError(f"{kind} has no entrywise decomposition")


def loss_value(spec: LossSpec, X, U, mask=None) -> float:
    """Total loss of centroid matrix U against data X.

    ``mask``, when given, restricts the sum to entries where mask is True
    (for multinomial views the mask is per original-feature cell, n x p).
    """
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    _check_shapes(X, U)
    kind = spec.kind
    if kind in ROWNORM_KINDS:
        R = X - U
        if mask is not None:
            R = np.where(mask, R, 0.0)
        if kind == "chebychev":
            return float(np.abs(R).max(axis=1).sum())
        return float(np.sum(np.linalg.norm(R, ord=spec.q, axis=1)))
    if kind == "multinomial_ll":
        cells = _multinomial_cells(spec, X, U)
        if mask is not None:
            cells = np.where(mask, cells, 0.0)
        return float(cells.sum())
    contrib = _entry_loss(spec, X, U)
    if mask is not None:
        contrib = np.where(mask, contrib, 0.0)
    return float(contrib.sum())


def loss_value_grouped(spec: LossSpec, X, U, mask=None) -> np.ndarray:
    """Loss split over feature groups (columns; feature blocks for multinomial)."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    _check_shapes(X, U)
    if spec.kind in ROWNORM_KINDS:
        raise ValueError(f"{spec.kind} loss does not decompose over columns")
    if spec.kind == "multinomial_ll":
        cells = _multinomial_cells(spec, X, U)
        if mask is not None:
            cells = np.where(mask, cells, 0.0)
        return cells.sum(axis=0)
    contrib = _entry_loss(spec, X, U)
    if mask is not None:
        contrib = np.where(mask, contrib, 0.0)
    return contrib.sum(axis=0)


def column_groups(spec: LossSpec, width: int) -> list:
    """Column indices forming one loss-separable group per entry of
    loss_value_grouped.  Plain losses give singleton columns; multinomial
    groups the K indicator columns of each original feature."""
    if spec.kind == "multinomial_ll":
        k = spec.classes
        p = width // k
        return [np.arange(j, width, p) for j in range(p)]
    return [np.array([j]) for j in range(width)]


def loss_gradient(spec: LossSpec, X, U, mask=None) -> np.ndarray:
    """Elementwise gradient of loss_value with respect to U."""
    if not spec.differentiable:
        raise ValueError(f"loss kind {spec.kind!r} is not differentiable")
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    _check_shapes(X, U)
    kind = spec.kind
    if kind == "euclidean":
        g = U - X
    elif kind == "poisson_ll":
        with np.errstate(over="ignore"):
            g = -X + np.exp(U)
    elif kind == "poisson_dev":
        g = -X / np.maximum(U, EPS) + 1.0
    elif kind == "negbin_ll":
        theta = spec.dispersion
        g = -X + (X + theta) * special.expit(U - np.log(theta))
    elif kind == "negbin_dev":
        theta = spec.dispersion
        Uc = np.maximum(U, EPS)
        g = -X / Uc + (X + theta) / (theta + Uc)
    elif kind == "bernoulli_ll":
        g = -X + special.expit(U)
    elif kind == "binomial_dev":
        Uc = np.clip(U, EPS, 1.0 - EPS)
        g = -X / Uc + (1.0 - X) / (1.0 - Uc)
    else:  # multinomial_ll
        n, width = X.shape
        k = spec.classes
        p = width // k
        Ub = U.reshape(n, k, p)
        g = (special.softmax(Ub, axis=1) - X.reshape(n, k, p)).reshape(n, width)
        if mask is not None:
            g = g * np.tile(mask, (1, k)).reshape(n, k, p).reshape(n, width)
        return g
    if mask is not None:
        g = np.where(mask, g, 0.0)
    return g


def _lower_median(column: np.ndarray) -> float:
    s = np.sort(column)
    return float(s[(len(s) - 1) // 2])


def _numeric_center(spec: LossSpec, column: np.ndarray) -> float:
    lo, hi = float(column.min()), float(column.max())
    if lo == hi:
        return lo
    col = column.reshape(-1, 1)

    def f(c):
        return loss_value(spec, col, np.full_like(col, c))

    res = optimize.minimize_scalar(
        f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-8}
    )
    return float(res.x)


def loss_center(spec: LossSpec, column):
    """Loss-specific center of one feature column.

    For multinomial_ll pass the n x K indicator block of one original feature;
    the center is then a length-K vector.  All other kinds take a 1-d column
    and return a scalar.
    """
    kind = spec.kind
    column = np.asarray(column, dtype=float)
    if column.size == 0:
        raise ValueError("empty column has no center")
    if kind == "multinomial_ll":
        if column.ndim != 2 or column.shape[1] != spec.classes:
            raise ValueError("multinomial center needs an n x classes block")
        props = np.maximum(column.mean(axis=0), EPS)
        return np.log(props / props.sum())
    if column.ndim != 1:
        raise ValueError("column must be 1-d")
    if kind == "euclidean" or kind in ("poisson_dev", "negbin_dev"):
        m = float(column.mean())
        return max(m, EPS) if kind != "euclidean" else m
    if kind == "binomial_dev":
        return float(np.clip(column.mean(), EPS, 1.0 - EPS))
    if kind == "manhattan":
        return _lower_median(column)
    if kind in ("poisson_ll", "negbin_ll"):
        return float(np.log(max(column.mean(), EPS)))
    if kind == "bernoulli_ll":
        return float(special.logit(np.clip(column.mean(), EPS, 1.0 - EPS)))
    if kind == "hinge":
        # Ties minimize anywhere in [-1, 1]; pick +1 deterministically.
        return 1.0 if np.sum(column > 0) >= np.sum(column < 0) else -1.0
    return _numeric_center(spec, column)


def center_matrix(spec: LossSpec, X) -> np.ndarray:
    """n x p matrix with every column at its loss-specific center."""
    X = np.asarray(X, dtype=float)
    n, width = X.shape
    if spec.kind == "multinomial_ll":
        k = spec.classes
        p = width // k
        out = np.empty(width)
        for j in range(p):
            cols = np.arange(j, width, p)
            out[cols] = loss_center(spec, X[:, cols])
        return np.tile(out, (n, 1))
    centers = np.array([loss_center(spec, X[:, j]) for j in range(width)])
    return np.tile(centers, (n, 1))


def null_deviance_weight(spec: LossSpec, X) -> float:
    """Inverse of the loss at the loss-specific center matrix."""
    X = np.asarray(X, dtype=float)
    dev = loss_value(spec, X, center_matrix(spec, X))
    return 1.0 / max(dev, EPS)


def expand_multinomial(labels, classes: int) -> np.ndarray:
    """Concatenated per-class indicator matrices of an integer label matrix.

    Labels take values 1..classes; the result is n x (p * classes) with class
    k's indicators occupying columns [(k-1)*p, k*p).
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("labels must be an n x p integer matrix")
    if labels.min() < 1 or labels.max() > classes:
        raise ValueError(f"labels must lie in 1..{classes}")
    n, p = labels.shape
    out = np.zeros((n, p * classes))
    for k in range(classes):
        out[:, k * p : (k + 1) * p] = labels == k + 1
    return out


def center_subgradient(spec: LossSpec, X, Xt) -> np.ndarray:
    """A subgradient of the loss at the center matrix, one row per sample.

    Used for the full-fusion penalty bounds.  Nonsmooth points use the zero
    selection (manhattan at a data value, hinge on the margin); chebychev
    charges only the first maximal coordinate of each row.
    """
    X = np.asarray(X, dtype=float)
    Xt = np.asarray(Xt, dtype=float)
    kind = spec.kind
    if spec.differentiable:
        return loss_gradient(spec, X, Xt)
    if kind == "manhattan":
        return np.sign(Xt - X)
    if kind == "hinge":
        return np.where(1.0 - X * Xt > 0, -X, 0.0)
    R = Xt - X
    if kind == "chebychev":
        g = np.zeros_like(R)
        rows = np.arange(R.shape[0])
        jmax = np.abs(R).argmax(axis=1)
        g[rows, jmax] = np.sign(R[rows, jmax])
        return g
    # minkowski
    q = spec.q
    norms = np.linalg.norm(R, ord=q, axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.sign(R) * np.abs(R) ** (q - 1) / norms ** (q - 1)
    return np.where(norms > 0, g, 0.0)
