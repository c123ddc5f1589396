"""Multi-block ADMM solvers for the joint clustering objective.

The main engine takes a single inexact step per sub-problem and iteration:
differentiable losses get one backtracking proximal-gradient step per feature
column, distance losses one sweep of their own splitting blocks, and the
squared-error / Bernoulli / hinge losses use analytic or bounded-curvature
updates with precomputed factorizations.  A full-solve mode runs each
sub-problem to convergence inside every outer iteration and serves as the
reference implementation.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import special

from . import core, prox
from .diffgraph import DifferenceOperator, extract_clusters, fusion_tolerance, selected_features

_TINY = 1e-12
_STEP_FLOOR = 1e-14


class SolverError(RuntimeError):
    """Numerical failure inside a solver step."""


class DivergenceError(SolverError):
    """Iterates became non-finite."""


@dataclass
class SolverOptions:
    rho: float = 1.0
    max_iter: int = 10000
    tol: float = 1e-5
    backtrack_shrink: float = 0.5
    step_init: float = 1.0
    fusion_tol: Optional[float] = None
    mode: str = "onestep"  # onestep | fullsolve
    inner_tol: float = 1e-7
    inner_max_iter: int = 200
    debug_checks: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.backtrack_shrink < 1:
            raise ValueError("backtrack_shrink must lie in (0, 1)")
        if self.rho <= 0 or self.tol <= 0 or self.inner_tol <= 0:
            raise ValueError("rho and tolerances must be positive")
        if self.mode not in ("onestep", "fullsolve"):
            raise ValueError("mode must be 'onestep' or 'fullsolve'")


class _ViewState:
    """Primal and dual blocks of one view."""

    __slots__ = ("u", "z", "r", "psi", "nu", "path")

    def __init__(self, u, z=None, r=None, psi=None, nu=None, path="diff"):
        self.u = u
        self.z = z
        self.r = r
        self.psi = psi
        self.nu = nu
        self.path = path

    def copy(self) -> "_ViewState":
        cp = lambda a: None if a is None else a.copy()
        return _ViewState(self.u.copy(), cp(self.z), cp(self.r), cp(self.psi), cp(self.nu), self.path)


@dataclass
class SolverState:
    views: list
    v: np.ndarray
    lam: np.ndarray
    rho: float
    iteration: int = 0

    def copy(self) -> "SolverState":
        return SolverState(
            [vs.copy() for vs in self.views],
            self.v.copy(),
            self.lam.copy(),
            self.rho,
            self.iteration,
        )


@dataclass
class Solution:
    u: tuple
    v: np.ndarray
    labels: np.ndarray
    selected: tuple
    objective: float
    initial_objective: float
    iterations: int
    converged: bool
    primal_residuals: np.ndarray
    dual_residuals: np.ndarray
    wall_time: float
    gamma: float
    alpha: float
    state: SolverState = field(repr=False, default=None)

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max()) + 1


def resolve_loss_weights(dataset: core.MultiViewDataset, penalties: core.Penalties) -> np.ndarray:
    """Loss weights, defaulting to null-deviance balancing.

    A single view is left unweighted.  Multiple views get weights inversely
    proportional to their null deviances, rescaled by the geometric mean so
    the total loss keeps the data's natural magnitude (the proportionality
    constant is free; this keeps penalty scales comparable across K).
    """
    if penalties.loss_weights is not None:
        lw = np.asarray(penalties.loss_weights, dtype=float)
        if lw.shape != (dataset.n_views,):
            raise ValueError("loss_weights must have one entry per view")
        return lw
    if dataset.n_views == 1:
        return np.ones(1)
    inv = np.array([core.null_deviance_weight(v.loss, v.data) for v in dataset.views])
    return inv / np.exp(np.mean(np.log(inv)))


def default_loss_weights(dataset: core.MultiViewDataset) -> np.ndarray:
    """The loss weights used when Penalties.loss_weights is None."""
    dummy = core.Penalties(0.0, 0.0, None)
    return resolve_loss_weights(dataset, dummy)


def resolve_feature_weights(dataset: core.MultiViewDataset, penalties: core.Penalties) -> tuple:
    if penalties.feature_weights is not None:
        fw = tuple(np.asarray(z, dtype=float) for z in penalties.feature_weights)
        if tuple(z.shape[0] for z in fw) != dataset.widths:
            raise ValueError("feature_weights shapes must match view widths")
        return fw
    return tuple(np.ones(p) for p in dataset.widths)


def objective(dataset, penalties, u_views, observed=None, centers=None) -> float:
    """The penalized objective: weighted losses + joint fusion + feature terms."""
    pi = resolve_loss_weights(dataset, penalties)
    zetas = resolve_feature_weights(dataset, penalties)
    if centers is None:
        centers = [core.center_matrix(v.loss, v.data) for v in dataset.views]
    masks = observed if observed is not None else [None] * dataset.n_views
    loss = sum(
        pi[k] * core.loss_value(v.loss, v.data, u_views[k], masks[k])
        for k, v in enumerate(dataset.views)
    )
    graph = penalties.fusion_weights
    fusion = 0.0
    if graph.n_edges and penalties.gamma > 0:
        sq = np.zeros(graph.n_edges)
        for u in u_views:
            d = u[graph.edges[:, 0]] - u[graph.edges[:, 1]]
            sq += np.einsum("ij,ij->i", d, d)
        fusion = penalties.gamma * float(graph.weights @ np.sqrt(sq))
    feat = 0.0
    if penalties.alpha > 0:
        for k, u in enumerate(u_views):
            dev = np.linalg.norm(u - centers[k], axis=0)
            feat += float(zetas[k] @ dev)
        feat *= penalties.alpha
    return float(loss) + fusion + feat


def full_fusion_gamma_bound(dataset, graph, loss_weights=None) -> float:
    """A fusion strength guaranteeing collapse to the loss-specific centers.

    Scales the largest per-sample loss subgradient at the center by the number
    of views, the smallest positive weight, and the pair count.
    """
    pi = (
        np.asarray(loss_weights, dtype=float)
        if loss_weights is not None
        else np.array([core.null_deviance_weight(v.loss, v.data) for v in dataset.views])
    )
    n = dataset.n
    worst = 0.0
    for k, view in enumerate(dataset.views):
        ct = core.center_matrix(view.loss, view.data)
        g = core.center_subgradient(view.loss, view.data, ct)
        worst = max(worst, pi[k] * float(np.linalg.norm(g, axis=1).max()))
    beta = dataset.n_views * 2.0 / (n * float(graph.weights.min())) * worst
    return math.comb(n, 2) * beta


def full_fusion_alpha_bound(dataset, feature_weights=None, loss_weights=None) -> float:
    """A feature-penalty strength shrinking every column to its center."""
    pi = (
        np.asarray(loss_weights, dtype=float)
        if loss_weights is not None
        else np.array([core.null_deviance_weight(v.loss, v.data) for v in dataset.views])
    )
    worst = 0.0
    zmin = 1.0
    for k, view in enumerate(dataset.views):
        ct = core.center_matrix(view.loss, view.data)
        g = core.center_subgradient(view.loss, view.data, ct)
        worst = max(worst, pi[k] * float(np.linalg.norm(g, axis=0).max()))
        if feature_weights is not None:
            z = np.asarray(feature_weights[k], dtype=float)
            pos = z[z > 0]
            if pos.size:
                zmin = min(zmin, float(pos.min()))
    return worst / zmin


def _initial_u(spec: core.LossSpec, X: np.ndarray) -> np.ndarray:
    kind = spec.kind
    if kind in ("poisson_ll", "negbin_ll"):
        return np.log(np.maximum(X, 0.1))
    if kind == "bernoulli_ll":
        return special.logit(np.clip(X, 0.05, 0.95))
    if kind == "multinomial_ll":
        return np.log(np.clip(X, 0.05, 1.0))
    if kind in ("poisson_dev", "negbin_dev"):
        return np.maximum(X, core.EPS)
    if kind == "binomial_dev":
        return np.clip(X, core.EPS, 1.0 - core.EPS)
    return X.copy()


class _Fitter:
    def __init__(self, dataset, penalties, options, observed=None):
        self.dataset = dataset
        self.pen = penalties
        self.opts = options
        self.graph = penalties.fusion_weights
        if self.graph.n != dataset.n:
            raise ValueError("weight graph sample count must match the dataset")
        if not self.graph.is_connected():
            warnings.warn("fusion-weight graph is not connected; full fusion is unreachable")
        self.op = DifferenceOperator(self.graph)
        self.pi = resolve_loss_weights(dataset, penalties)
        self.zetas = resolve_feature_weights(dataset, penalties)
        self.centers = [core.center_matrix(v.loss, v.data) for v in dataset.views]
        self.observed = list(observed) if observed is not None else [None] * dataset.n_views
        widths = dataset.widths
        self.offsets = np.concatenate([[0], np.cumsum(widths)])
        self.groups = [
            core.column_groups(v.loss, v.data.shape[1]) for v in dataset.views
        ]
        self.gids = []
        for gl, p in zip(self.groups, widths):
            gid = np.empty(p, dtype=int)
            for g, cols in enumerate(gl):
                gid[cols] = g
            self.gids.append(gid)

    # ---- dispatch -------------------------------------------------------
    def _path_for(self, k: int) -> str:
        kind = self.dataset.views[k].loss.kind
        if self.opts.mode == "fullsolve":
            if kind in ("manhattan", "minkowski", "chebychev"):
                return "nondiff"
            if kind == "hinge":
                return "hinge"
            return "diff"
        if kind == "euclidean":
            return "diff" if self.observed[k] is not None else "euclid"
        if kind == "bernoulli_ll":
            return "bern"
        if kind == "hinge":
            return "hinge"
        if kind in ("manhattan", "minkowski", "chebychev"):
            return "nondiff"
        return "diff"

    def _init_state(self) -> SolverState:
        views = []
        for k, view in enumerate(self.dataset.views):
            X, spec = view.data, view.loss
            path = self._path_for(k)
            u = _initial_u(spec, X)
            z = psi = r = nu = None
            if path in ("nondiff", "hinge"):
                z = (X - u) if path == "nondiff" else (1.0 - u * X)
                psi = np.zeros_like(X)
            if path in ("nondiff", "hinge", "euclid", "bern"):
                r = u - self.centers[k]
                nu = np.zeros_like(X)
            views.append(_ViewState(u, z, r, psi, nu, path))
        v = np.hstack([self.op.apply(vs.u) for vs in views])
        lam = np.zeros_like(v)
        return SolverState(views, v, lam, self.opts.rho)

    def _adopt(self, warm) -> SolverState:
        state = warm.state if isinstance(warm, Solution) else warm
        if not isinstance(state, SolverState):
            raise ValueError("warm start must be a Solution or SolverState")
        state = state.copy()
        widths = self.dataset.widths
        if tuple(vs.u.shape for vs in state.views) != tuple(
            (self.dataset.n, p) for p in widths
        ):
            raise ValueError("warm start shapes do not match the dataset")
        state.rho = self.opts.rho
        for k, vs in enumerate(state.views):
            path = self._path_for(k)
            X = self.dataset.views[k].data
            if path in ("nondiff", "hinge") and vs.z is None:
                vs.z = (X - vs.u) if path == "nondiff" else (1.0 - vs.u * X)
                vs.psi = np.zeros_like(X)
            if path in ("nondiff", "hinge", "euclid", "bern") and vs.r is None:
                vs.r = vs.u - self.centers[k]
                vs.nu = np.zeros_like(X)
            vs.path = path
        return state

    def _slice(self, k: int) -> slice:
        return slice(self.offsets[k], self.offsets[k + 1])

    # ---- per-view steps -------------------------------------------------
    def _prox_loss_block(self, k: int, arg: np.ndarray, t: float) -> np.ndarray:
        """Prox of the loss's non-smooth part on its splitting block."""
        spec = self.dataset.views[k].loss
        mask = self.observed[k]
        kind = spec.kind
        if kind == "manhattan":
            out = prox.prox_l1(arg, t)
        elif kind == "hinge":
            out = prox.prox_hinge(arg, t)
        else:
            out = np.empty_like(arg)
            for i in range(arg.shape[0]):
                row = arg[i]
                obs = None if mask is None else mask[i]
                target = row if obs is None else row[obs]
                if kind == "chebychev":
                    solved = prox.prox_linf_row(target, t)
                else:
                    solved = prox.prox_lq_row(target, t, spec.q)
                if obs is None:
                    out[i] = solved
                else:
                    out[i] = row
                    out[i, obs] = solved
            return out
        if mask is not None:
            out = np.where(mask, out, arg)
        return out

    def _step_diff(self, state: SolverState, k: int) -> float:
        vs = state.views[k]
        view = self.dataset.views[k]
        X, spec, mask = view.data, view.loss, self.observed[k]
        rho, alpha = self.opts.rho, self.pen.alpha
        sl = self._slice(k)
        vk, lk = state.v[:, sl], state.lam[:, sl]
        gid = self.gids[k]
        zeta = self.zetas[k]
        u = vs.u
        xt = self.centers[k]
        ut = u - xt
        resid = self.op.apply(u) - vk + lk
        grad = self.pi[k] * core.loss_gradient(spec, X, u, mask) + rho * self.op.apply_t(resid)
        quad = 0.5 * rho * np.einsum("ij,ij->j", resid, resid)
        g0 = self.pi[k] * core.loss_value_grouped(spec, X, u, mask) + np.bincount(
            gid, weights=quad, minlength=len(self.groups[k])
        )
        if not np.all(np.isfinite(g0)):
            raise DivergenceError("non-finite sub-problem objective")
        base = self.op.apply(xt) - vk + lk
        t = np.full(len(g0), self.opts.step_init)
        beta = self.opts.backtrack_shrink
        slack = 1e-12 * (1.0 + np.abs(g0))
        while True:
            tcol = t[gid]
            z = prox.prox_cols_group(ut - tcol * grad, tcol * alpha * zeta)
            uz = z + xt
            residz = self.op.apply(z) + base
            quadz = 0.5 * rho * np.einsum("ij,ij->j", residz, residz)
            gz = self.pi[k] * core.loss_value_grouped(spec, X, uz, mask) + np.bincount(
                gid, weights=quadz, minlength=len(g0)
            )
            diff = ut - z
            lin = np.bincount(
                gid, weights=np.einsum("ij,ij->j", grad, diff), minlength=len(g0)
            )
            sq = np.bincount(
                gid, weights=np.einsum("ij,ij->j", diff, diff), minlength=len(g0)
            )
            rhs = g0 - lin + sq / (2.0 * t)
            with np.errstate(invalid="ignore"):
                viol = ~(gz <= rhs + slack)
            if not viol.any():
                break
            t[viol] *= beta
            if t[viol].min() < _STEP_FLOOR:
                raise SolverError("backtracking step underflow: ill-conditioned sub-problem")
        if self.opts.debug_checks:
            assert np.all(gz <= rhs + slack), "majorization certificate violated"
        delta = float(np.linalg.norm(z - ut))
        vs.u = z + xt
        return delta

    def _step_nondiff(self, state: SolverState, k: int) -> float:
        vs = state.views[k]
        view = self.dataset.views[k]
        X = view.data
        rho, alpha = self.opts.rho, self.pen.alpha
        sl = self._slice(k)
        vk, lk = state.v[:, sl], state.lam[:, sl]
        xt = self.centers[k]
        rhs = self.op.apply_t(vk - lk) + xt + vs.r - vs.nu + X - vs.z + vs.psi
        u = self.op.solve_shifted(2.0, rhs)
        delta = float(np.linalg.norm(u - vs.u))
        vs.z = self._prox_loss_block(k, X - u + vs.psi, self.pi[k] / rho)
        vs.r = prox.prox_cols_group(u - xt + vs.nu, (alpha / rho) * self.zetas[k])
        vs.psi = vs.psi + (X - u - vs.z)
        vs.nu = vs.nu + (u - xt - vs.r)
        vs.u = u
        return delta

    def _step_hinge(self, state: SolverState, k: int) -> float:
        vs = state.views[k]
        view = self.dataset.views[k]
        X = view.data
        rho, alpha = self.opts.rho, self.pen.alpha
        sl = self._slice(k)
        vk, lk = state.v[:, sl], state.lam[:, sl]
        xt = self.centers[k]
        # With +-1 data the curvature matrix reduces to D^T D + 2I and the
        # extra proximal term (1 - X o X) o U vanishes.
        rhs = self.op.apply_t(vk - lk) + xt + vs.r - vs.nu - X * (vs.z - 1.0 - vs.psi)
        u = self.op.solve_shifted(2.0, rhs)
        delta = float(np.linalg.norm(u - vs.u))
        vs.z = self._prox_loss_block(k, 1.0 - u * X + vs.psi, self.pi[k] / rho)
        vs.r = prox.prox_cols_group(u - xt + vs.nu, (alpha / rho) * self.zetas[k])
        vs.psi = vs.psi + (1.0 - u * X - vs.z)
        vs.nu = vs.nu + (u - xt - vs.r)
        vs.u = u
        return delta

    def _step_euclid(self, state: SolverState, k: int) -> float:
        vs = state.views[k]
        X = self.dataset.views[k].data
        rho, alpha = self.opts.rho, self.pen.alpha
        sl = self._slice(k)
        vk, lk = state.v[:, sl], state.lam[:, sl]
        xt = self.centers[k]
        pi = self.pi[k]
        rhs = (pi * X + rho * self.op.apply_t(vk - lk) + rho * (xt + vs.r - vs.nu)) / rho
        u = self.op.solve_shifted((pi + rho) / rho, rhs)
        delta = float(np.linalg.norm(u - vs.u))
        vs.r = prox.prox_cols_group(u - xt + vs.nu, (alpha / rho) * self.zetas[k])
        vs.nu = vs.nu + (u - xt - vs.r)
        vs.u = u
        return delta

    def _step_bern(self, state: SolverState, k: int) -> float:
        vs = state.views[k]
        view = self.dataset.views[k]
        X, spec, mask = view.data, view.loss, self.observed[k]
        rho, alpha = self.opts.rho, self.pen.alpha
        sl = self._slice(k)
        vk, lk = state.v[:, sl], state.lam[:, sl]
        xt = self.centers[k]
        pi = self.pi[k]
        grad = (
            pi * core.loss_gradient(spec, X, vs.u, mask)
            + rho * self.op.apply_t(self.op.apply(vs.u) - vk + lk)
            + rho * (vs.u - xt - vs.r + vs.nu)
        )
        u = vs.u - self.op.solve_shifted((pi / 4.0 + rho) / rho, grad / rho)
        delta = float(np.linalg.norm(u - vs.u))
        vs.r = prox.prox_cols_group(u - xt + vs.nu, (alpha / rho) * self.zetas[k])
        vs.nu = vs.nu + (u - xt - vs.r)
        vs.u = u
        return delta

    _STEPS = {
        "diff": _step_diff,
        "nondiff": _step_nondiff,
        "hinge": _step_hinge,
        "euclid": _step_euclid,
        "bern": _step_bern,
    }

    def _u_update(self, state: SolverState, k: int) -> None:
        step = self._STEPS[state.views[k].path]
        if self.opts.mode == "onestep":
            step(self, state, k)
            return
        scale = 1.0 + float(np.linalg.norm(self.dataset.views[k].data))
        for _ in range(self.opts.inner_max_iter):
            delta = step(self, state, k)
            if delta <= self.opts.inner_tol * scale:
                break

    # ---- main loop ------------------------------------------------------
    def run(self, warm_start=None) -> Solution:
        opts = self.opts
        start = time.perf_counter()
        state = self._adopt(warm_start) if warm_start is not None else self._init_state()
        u0 = tuple(vs.u.copy() for vs in state.views)
        initial_objective = objective(
            self.dataset, self.pen, u0, self.observed_or_none(), self.centers
        )
        rho, gamma = opts.rho, self.pen.gamma
        prim_hist, dual_hist = [], []
        converged = False
        it = 0
        # Residual scale floor: keeps the scaled ratios meaningful when the
        # iterates fuse exactly (both DU and V go to zero).
        floor = 1e-2 * (1.0 + math.sqrt(sum(float(np.sum(v.data**2)) for v in self.dataset.views)))
        for it in range(1, opts.max_iter + 1):
            for k in range(self.dataset.n_views):
                self._u_update(state, k)
            du = np.hstack([self.op.apply(vs.u) for vs in state.views])
            if not np.all(np.isfinite(du)):
                raise DivergenceError(
                    f"solver diverged at iteration {it}"
                    + (f" (last residuals {prim_hist[-1]:.3e}/{dual_hist[-1]:.3e})" if prim_hist else "")
                )
            v_prev = state.v
            state.v = prox.prox_fusion_rows(du + state.lam, gamma / rho, self.graph.weights)
            state.lam = state.lam + du - state.v
            r_p = np.linalg.norm(du - state.v) / max(
                np.linalg.norm(du), np.linalg.norm(state.v), floor
            )
            r_d = (rho * np.linalg.norm(self.op.apply_t(state.v - v_prev))) / max(
                np.linalg.norm(state.lam), np.linalg.norm(state.v), floor
            )
            prim_hist.append(r_p)
            dual_hist.append(r_d)
            state.iteration += 1
            if max(r_p, r_d) <= opts.tol:
                converged = True
                break
        u_final = tuple(vs.u.copy() for vs in state.views)
        tol_fuse = (
            opts.fusion_tol
            if opts.fusion_tol is not None
            else fusion_tolerance(self.dataset.views)
        )
        labels = extract_clusters(state.v, self.graph, tol_fuse)
        masks = selected_features(u_final, self.centers, tol_fuse)
        obj = objective(self.dataset, self.pen, u_final, self.observed_or_none(), self.centers)
        return Solution(
            u=u_final,
            v=state.v.copy(),
            labels=labels,
            selected=masks,
            objective=obj,
            initial_objective=initial_objective,
            iterations=it,
            converged=converged,
            primal_residuals=np.array(prim_hist),
            dual_residuals=np.array(dual_hist),
            wall_time=time.perf_counter() - start,
            gamma=self.pen.gamma,
            alpha=self.pen.alpha,
            state=state,
        )

    def observed_or_none(self):
        return self.observed if any(m is not None for m in self.observed) else None


def fit(dataset, penalties, options=None, warm_start=None, observed=None) -> Solution:
    """Solve the clustering problem with the one-step inexact multi-block ADMM.

    Per iteration every view takes a single sub-problem step, then the fused
    difference block and its dual are updated jointly across views.  Stops on
    scaled primal and dual residuals or ``max_iter`` (returning the last
    iterate flagged as non-converged).  ``observed`` restricts each view's
    loss to a boolean mask of entries, used by hold-out validation.
    """
    opts = options if options is not None else SolverOptions()
    return _Fitter(dataset, penalties, opts, observed).run(warm_start)


def fit_fullsolve(dataset, penalties, options=None, warm_start=None, observed=None) -> Solution:
    """Reference solver: every sub-problem is solved to inner tolerance."""
    opts = options if options is not None else SolverOptions()
    if opts.mode != "fullsolve":
        opts = replace(opts, mode="fullsolve")
    return _Fitter(dataset, penalties, opts, observed).run(warm_start)
