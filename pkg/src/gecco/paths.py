"""Regularization paths, model selection, and the adaptive refit procedure."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import core, solver
from . import weights as weights_mod

DEFAULT_ALPHA_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
GAMMA_SEARCH_BUDGET = 40


@dataclass
class PathPoint:
    gamma: float
    alpha: float
    labels: np.ndarray
    selected: tuple
    objective: float
    n_clusters: int
    converged: bool
    iterations: int
    error: Optional[str] = None


@dataclass
class ClusteringPath:
    points: list

    def as_records(self) -> list:
        return [
            {
                "alpha": p.alpha,
                "gamma": p.gamma,
                "n_clusters": p.n_clusters,
                "objective": p.objective,
                "converged": p.converged,
                "n_selected": int(sum(int(np.sum(m)) for m in p.selected)),
                "error": p.error or "",
            }
            for p in self.points
        ]


def default_gamma_grid(dataset, graph, loss_weights=None, num: int = 50) -> np.ndarray:
    """Log-spaced fusion grid ending at the full-fusion bound estimate."""
    gmax = solver.full_fusion_gamma_bound(dataset, graph, loss_weights)
    return np.geomspace(1e-3 * gmax, gmax, num)


def _penalties(graph, gamma, alpha, feature_weights, loss_weights):
    return core.Penalties(
        gamma=gamma,
        alpha=alpha,
        fusion_weights=graph,
        feature_weights=feature_weights,
        loss_weights=loss_weights,
    )


def _sweep(dataset, graph, gamma_grid, alpha, options, feature_weights, loss_weights, observed):
    """Ascending warm-started gamma sweep at one alpha, yielding solutions."""
    warm = None
    for gamma in np.sort(np.asarray(gamma_grid, dtype=float)):
        pen = _penalties(graph, float(gamma), float(alpha), feature_weights, loss_weights)
        try:
            sol = solver.fit(dataset, pen, options, warm_start=warm, observed=observed)
        except solver.SolverError as exc:
            yield float(gamma), None, str(exc)
            continue
        warm = sol
        yield float(gamma), sol, None


def regularization_path(
    dataset,
    graph,
    gamma_grid,
    alpha_grid,
    options=None,
    feature_weights=None,
    loss_weights=None,
    observed=None,
) -> ClusteringPath:
    """Fit over the (gamma, alpha) grid, warm-starting along each gamma sweep.

    Gammas are swept ascending within each alpha; a failed fit is recorded on
    its grid point and the sweep continues.  Cluster counts are recorded, not
    enforced to be monotone.
    """
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    alpha_grid = np.asarray(alpha_grid, dtype=float)
    if gamma_grid.size == 0 or alpha_grid.size == 0:
        raise ValueError("grids must be nonempty")
    if np.any(gamma_grid < 0) or np.any(alpha_grid < 0):
        raise ValueError("grids must be nonnegative")
    points = []
    for alpha in alpha_grid:
        for gamma, sol, err in _sweep(
            dataset, graph, gamma_grid, alpha, options, feature_weights, loss_weights, observed
        ):
            if sol is None:
                points.append(
                    PathPoint(
                        gamma, float(alpha), np.arange(dataset.n), (), np.nan,
                        dataset.n, False, 0, err,
                    )
                )
            else:
                points.append(
                    PathPoint(
                        gamma, float(alpha), sol.labels, sol.selected, sol.objective,
                        sol.n_clusters, sol.converged, sol.iterations,
                    )
                )
    return ClusteringPath(points)


def _holdout_masks(dataset, frac: float, rng) -> list:
    """Per-view boolean masks of held-out entries (feature cells for
    multinomial views).  Resamples when a row or column goes fully missing."""
    masks = []
    for view in dataset.views:
        n, width = view.data.shape
        p = width // view.loss.classes if view.loss.kind == "multinomial_ll" else width
        size = n * p
        n_mask = int(round(frac * size))
        for _ in range(10):
            held = np.zeros(size, dtype=bool)
            held[rng.choice(size, size=n_mask, replace=False)] = True
            held = held.reshape(n, p)
            if n_mask == 0 or (held.all(axis=1).sum() == 0 and held.all(axis=0).sum() == 0):
                break
        else:
            raise RuntimeError("hold-out masking left an empty row or column")
        masks.append(held)
    return masks


def holdout_error(dataset, u_views, held_masks, loss_weights) -> float:
    """Weighted loss over held-out entries only."""
    return float(
        sum(
            pi * core.loss_value(v.loss, v.data, u, mask)
            for pi, v, u, mask in zip(loss_weights, dataset.views, u_views, held_masks)
        )
    )


def holdout_validate(
    dataset,
    graph,
    gamma_grid,
    alpha_grid,
    frac: float = 0.1,
    seed: int = 0,
    options=None,
    feature_weights=None,
    loss_weights=None,
):
    """Pick (gamma, alpha) by prediction error on randomly held-out entries.

    A fraction of entries per view is masked, fits use only observed entries,
    and the error is the weighted loss over masked entries at the fitted
    centroids.  Ties keep the first grid point in (alpha, gamma) order.
    Returns ``(gamma, alpha, table)`` with table rows (alpha, gamma, error).
    """
    if not 0 < frac <= 0.5:
        raise ValueError("frac must lie in (0, 0.5]")
    rng = np.random.default_rng(seed)
    held = _holdout_masks(dataset, frac, rng)
    observed = [~h for h in held]
    pi = (
        np.asarray(loss_weights, dtype=float)
        if loss_weights is not None
        else solver.default_loss_weights(dataset)
    )
    table = []
    best = (np.inf, None, None)
    for alpha in np.asarray(alpha_grid, dtype=float):
        for gamma, sol, err_msg in _sweep(
            dataset, graph, gamma_grid, alpha, options, feature_weights, loss_weights, observed
        ):
            err = np.inf if sol is None else holdout_error(dataset, sol.u, held, pi)
            table.append((float(alpha), gamma, err))
            if err < best[0]:
                best = (err, gamma, float(alpha))
    if best[1] is None:
        best = (table[0][2], table[0][1], table[0][0])
    return best[1], best[2], table


def within_cluster_deviance(dataset, labels, loss_weights=None) -> float:
    """Weighted loss of each cluster against its own loss-specific centers."""
    labels = np.asarray(labels)
    if loss_weights is None:
        loss_weights = solver.default_loss_weights(dataset)
    total = 0.0
    for pi, view in zip(loss_weights, dataset.views):
        for lab in np.unique(labels):
            rows = view.data[labels == lab]
            total += pi * core.loss_value(view.loss, rows, core.center_matrix(view.loss, rows))
    return float(total)


@dataclass
class GammaSearch:
    gamma: float
    n_clusters: int
    achieved: bool
    solution: solver.Solution
    evaluations: int


def gamma_for_k(
    dataset,
    graph,
    alpha: float,
    k_target: int,
    gamma_range=None,
    options=None,
    feature_weights=None,
    loss_weights=None,
) -> GammaSearch:
    """Search the fusion strength that yields a target cluster count.

    Coarse geometric scan to bracket the count, then bisection on log-gamma;
    at most GAMMA_SEARCH_BUDGET fits.  When the exact count is unreachable on
    the range, returns the smallest gamma whose count is <= the target,
    flagged as not achieved.
    """
    if not 1 <= k_target <= dataset.n:
        raise ValueError("k_target must lie in [1, n]")
    if gamma_range is None:
        gmax = solver.full_fusion_gamma_bound(dataset, graph, loss_weights)
        gamma_range = (1e-6 * gmax, gmax)
    lo, hi = float(gamma_range[0]), float(gamma_range[1])
    evals = 0
    cache = {}

    def count_at(gamma, warm=None):
        nonlocal evals
        if gamma in cache:
            return cache[gamma]
        pen = _penalties(graph, gamma, alpha, feature_weights, loss_weights)
        sol = solver.fit(dataset, pen, options, warm_start=warm)
        evals += 1
        cache[gamma] = sol
        return sol

    best_le = None  # smallest gamma with count <= target
    sol_hi = count_at(hi)
    if sol_hi.n_clusters <= k_target:
        best_le = (hi, sol_hi)
    if sol_hi.n_clusters == k_target:
        return GammaSearch(hi, k_target, True, sol_hi, evals)
    sol_lo = count_at(lo)
    if sol_lo.n_clusters == k_target:
        return GammaSearch(lo, k_target, True, sol_lo, evals)
    if sol_lo.n_clusters < k_target:
        # Even the smallest gamma over-fuses; the target is unreachable.
        return GammaSearch(lo, sol_lo.n_clusters, False, sol_lo, evals)
    if best_le is None:
        # Largest gamma still has too many clusters.
        return GammaSearch(hi, sol_hi.n_clusters, False, sol_hi, evals)
    # Coarse geometric scan (warm-started upward) to tighten the bracket.
    grid = np.geomspace(lo, hi, 8)[1:-1]
    warm = sol_lo
    for g in grid:
        if evals >= GAMMA_SEARCH_BUDGET - 2:
            break
        sol = count_at(float(g), warm)
        warm = sol
        if sol.n_clusters == k_target:
            return GammaSearch(float(g), k_target, True, sol, evals)
        if sol.n_clusters > k_target:
            lo, sol_lo = float(g), sol
        else:
            hi, sol_hi = float(g), sol
            best_le = (float(g), sol)
            break
    while evals < GAMMA_SEARCH_BUDGET and hi / lo > 1.0 + 1e-3:
        mid = float(np.sqrt(lo * hi))
        sol = count_at(mid, sol_lo)
        if sol.n_clusters == k_target:
            return GammaSearch(mid, k_target, True, sol, evals)
        if sol.n_clusters > k_target:
            lo, sol_lo = mid, sol
        else:
            hi, sol_hi = mid, sol
            best_le = (mid, sol)
    gamma, sol = best_le
    return GammaSearch(gamma, sol.n_clusters, False, sol, evals)


@dataclass
class AdaptiveResult:
    solution: solver.Solution
    initial_solution: solver.Solution
    feature_weights: tuple
    fusion_graph: "weights_mod.WeightGraph"
    initial_gamma: float
    gamma: float
    alpha: float
    alphas_tried: tuple
    deviances: tuple


def adaptive_fit(
    dataset,
    k_target: int,
    options=None,
    weight_kind: str = "knn",
    initial_metric: str = None,
    knn: int = None,
    phi: float = None,
    alphas=(1.0,),
    gamma_range=None,
) -> AdaptiveResult:
    """Two-stage fit that learns feature and fusion weights from a pilot run.

    Stage one fits with alpha = 1 and uniform feature weights, searching the
    fusion strength for the target cluster count.  Stage two reweights
    features by their fitted activity, rebuilds fusion weights from the
    activity-weighted Gower distance, and refits; among the candidate alphas
    the largest one minimizing within-cluster deviance wins.
    """
    if initial_metric is None:
        initial_metric = "per_loss" if dataset.n_views == 1 else "gower"
    pi = solver.default_loss_weights(dataset)
    d0 = weights_mod.pairwise_distance(dataset, initial_metric)
    graph0 = weights_mod.build_weight_graph(d0, kind=weight_kind, k=knn, phi=phi)

    search0 = gamma_for_k(
        dataset, graph0, 1.0, k_target, gamma_range, options, None, pi
    )
    sol0 = search0.solution
    centers = [core.center_matrix(v.loss, v.data) for v in dataset.views]
    zeta_hat = weights_mod.adaptive_feature_weights(sol0.u, centers)
    d_hat = weights_mod.weighted_gower_distance(dataset, sol0.u, centers, pi)
    graph_hat = weights_mod.build_weight_graph(d_hat, kind=weight_kind, k=knn, phi=phi)

    candidates = []
    deviances = []
    for alpha in alphas:
        search = gamma_for_k(
            dataset, graph_hat, float(alpha), k_target, gamma_range, options, zeta_hat, pi
        )
        wcd = within_cluster_deviance(dataset, search.solution.labels, pi)
        candidates.append((float(alpha), search))
        deviances.append(wcd)
    # Prefer alphas that actually reach the target count, then the largest
    # alpha among the deviance minimizers.
    achieved = [i for i, (_, s) in enumerate(candidates) if s.n_clusters == k_target]
    pool = achieved if achieved else list(range(len(candidates)))
    best_dev = min(deviances[i] for i in pool)
    chosen_idx = max(
        (i for i in pool if deviances[i] <= best_dev * (1 + 1e-9)),
        key=lambda i: candidates[i][0],
    )
    chosen, final = candidates[chosen_idx]
    return AdaptiveResult(
        solution=final.solution,
        initial_solution=sol0,
        feature_weights=zeta_hat,
        fusion_graph=graph_hat,
        initial_gamma=search0.gamma,
        gamma=final.gamma,
        alpha=chosen,
        alphas_tried=tuple(float(a) for a in alphas),
        deviances=tuple(deviances),
    )
