"""Clustering metrics and simulation generators for the numerical studies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .core import LossSpec, MultiViewDataset, View


def adjusted_rand_index(a, b) -> float:
    """Chance-corrected agreement between two partitions.

    Computed from the pair-counting contingency table; 1.0 for identical
    partitions, around 0 for independent ones.  Symmetric and invariant to
    label permutation.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("labelings must be 1-d and of equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least two samples")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(table, (ai, bi), 1.0)

    def comb2(x):
        return x * (x - 1.0) / 2.0

    sum_cells = comb2(table).sum()
    sum_a = comb2(table.sum(axis=1)).sum()
    sum_b = comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / comb2(n)
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))


def f1_selection(selected, truth) -> float:
    """F1 score of a selected-feature mask against the true mask."""
    selected = np.asarray(selected, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if selected.shape != truth.shape:
        raise ValueError("masks must have equal length")
    tp = np.sum(selected & truth)
    if selected.sum() == 0 and truth.sum() == 0:
        return 1.0
    if tp == 0:
        return 0.0
    precision = tp / selected.sum()
    recall = tp / truth.sum()
    return float(2 * precision * recall / (precision + recall))


@dataclass(frozen=True)
class SimulatedData:
    data: np.ndarray
    labels: np.ndarray
    informative: np.ndarray  # boolean feature mask
    outliers: np.ndarray  # boolean sample flags


SPHERICAL_MEANS = np.array(
    [
        [-2.5] * 5 + [0.0] * 5,
        [0.0] * 5 + [2.5] * 5,
        [2.5] * 5 + [0.0] * 5,
    ]
)

POISSON_MEANS = np.array([1.0, 4.0, 7.0])

# Half-moon layout: three radius-1 arcs, the middle one flipped and shifted
# so the arms interlock.
_MOON_CENTERS = np.array([[0.0, 0.0], [1.0, 0.5], [2.0, 0.0]])
_MOON_FLIP = np.array([1.0, -1.0, 1.0])


def _equal_groups(n: int) -> np.ndarray:
    if n % 3 != 0:
        raise ValueError("n must be divisible by 3")
    return np.repeat(np.arange(3), n // 3)


def _pick_outliers(labels: np.ndarray, frac: float, rng) -> np.ndarray:
    if not 0 <= frac < 1:
        raise ValueError("outlier fraction must lie in [0, 1)")
    flags = np.zeros(labels.size, dtype=bool)
    for g in range(3):
        idx = np.flatnonzero(labels == g)
        n_out = int(round(frac * idx.size))
        if n_out:
            flags[rng.choice(idx, size=n_out, replace=False)] = True
    return flags


def simulate_spherical(
    n: int = 120,
    p_noise: int = 25,
    outlier_frac: float = 0.05,
    noise_sd: float = 1.0,
    seed: int = 0,
) -> SimulatedData:
    """Three Gaussian groups in 10 informative features plus noise columns.

    Outliers keep their group mean but have five times the variance.
    """
    rng = np.random.default_rng(seed)
    labels = _equal_groups(n)
    outliers = _pick_outliers(labels, outlier_frac, rng)
    informative = rng.normal(SPHERICAL_MEANS[labels], 1.0)
    if outliers.any():
        informative[outliers] = rng.normal(
            SPHERICAL_MEANS[labels[outliers]], np.sqrt(5.0)
        )
    noise = rng.normal(0.0, noise_sd, size=(n, p_noise))
    data = np.hstack([informative, noise])
    mask = np.zeros(data.shape[1], dtype=bool)
    mask[:10] = True
    return SimulatedData(data, labels, mask, outliers)


def _moon_coords(labels: np.ndarray, rng, noise_sd: float) -> np.ndarray:
    theta = rng.uniform(0.0, np.pi, size=labels.size)
    x = _MOON_CENTERS[labels, 0] + np.cos(theta)
    y = _MOON_CENTERS[labels, 1] + _MOON_FLIP[labels] * np.sin(theta)
    pts = np.column_stack([x, y])
    if noise_sd > 0:
        pts = pts + rng.normal(0.0, noise_sd, size=pts.shape)
    return pts


def simulate_halfmoons(
    n: int = 120,
    p_noise: int = 25,
    outlier_frac: float = 0.05,
    noise_sd: float = 0.1,
    seed: int = 0,
) -> SimulatedData:
    """Three interlocking half moons in five informative feature pairs.

    Each pair is an independent draw of the same arc layout; outliers get
    tenfold observation noise.
    """
    rng = np.random.default_rng(seed)
    labels = _equal_groups(n)
    outliers = _pick_outliers(labels, outlier_frac, rng)
    pairs = []
    for _ in range(5):
        pts = _moon_coords(labels, rng, noise_sd)
        if outliers.any():
            pts[outliers] += rng.normal(0.0, 9.0 * noise_sd, size=(outliers.sum(), 2))
        pairs.append(pts)
    noise = rng.normal(0.0, 1.0, size=(n, p_noise))
    data = np.hstack(pairs + [noise])
    mask = np.zeros(data.shape[1], dtype=bool)
    mask[:10] = True
    return SimulatedData(data, labels, mask, outliers)


def simulate_poisson(n: int = 120, p_noise: int = 25, seed: int = 0) -> SimulatedData:
    """Three Poisson groups with rates 1, 4, 7 on the informative block.

    Noise columns are Poisson with a per-column rate drawn uniformly from
    the integers 1..10.
    """
    rng = np.random.default_rng(seed)
    labels = _equal_groups(n)
    informative = rng.poisson(POISSON_MEANS[labels][:, None], size=(n, 10))
    rates = rng.integers(1, 11, size=p_noise)
    noise = rng.poisson(rates[None, :], size=(n, p_noise))
    data = np.hstack([informative, noise]).astype(float)
    mask = np.zeros(data.shape[1], dtype=bool)
    mask[:10] = True
    return SimulatedData(data, labels, mask, np.zeros(n, dtype=bool))


MULTIVIEW_DIMS = {
    "s1": (10, 10, 10),
    "s2": (10, 10, 10),
    "s3": (200, 100, 50),
    "s4": (200, 100, 50),
    "s5": (50, 200, 100),
    "s6": (50, 200, 100),
}

MV_GAUSS_SD = np.sqrt(3.0)
MV_POISSON_MEANS = np.array([2.0, 4.0, 6.0])
MV_BERNOULLI_MEANS = np.array([0.5, 0.2, 0.8])


def _copula_transform(values: np.ndarray, dist) -> np.ndarray:
    """Map each column through ranks to the target marginal's quantiles."""
    n = values.shape[0]
    ranks = np.argsort(np.argsort(values, axis=0), axis=0) + 1.0
    grades = (ranks - 0.5) / n
    return dist.ppf(grades)


@dataclass(frozen=True)
class MultiViewSim:
    dataset: MultiViewDataset
    labels: np.ndarray
    informative: tuple  # per-view boolean masks
    outliers: np.ndarray


def simulate_multiview(
    scenario: str,
    seed: int = 0,
    n: int = 120,
    dims=None,
) -> MultiViewSim:
    """Three-view mixed datasets for the integrative scenarios s1..s6.

    Odd scenarios are spherical (Gaussian / Poisson / Bernoulli views), even
    ones are half-moon shaped with the count and proportion views obtained by
    a copula transform (Poisson(3) and Beta(2, 2) marginals).  View losses
    follow the study setup: squared error, Manhattan, Bernoulli
    log-likelihood.
    """
    scenario = scenario.lower()
    if scenario not in MULTIVIEW_DIMS:
        raise ValueError(f"unknown scenario {scenario!r}")
    if dims is None:
        dims = MULTIVIEW_DIMS[scenario]
    rng = np.random.default_rng(seed)
    labels = _equal_groups(n)
    halfmoon = scenario in ("s2", "s4", "s6")
    views = []
    masks = []
    for v, p_total in enumerate(dims):
        if p_total < 10:
            raise ValueError("each view needs at least the 10 informative features")
        p_noise = p_total - 10
        if halfmoon:
            pairs = [_moon_coords(labels, rng, 0.2) for _ in range(5)]
            informative = np.hstack(pairs)
            if v == 0:
                noise = rng.normal(0.0, 1.0, size=(n, p_noise))
                data = np.hstack([informative, noise])
                spec = LossSpec("euclidean")
            elif v == 1:
                counts = _copula_transform(informative, stats.poisson(3.0))
                noise = rng.poisson(3.0, size=(n, p_noise))
                data = np.hstack([counts, noise]).astype(float)
                spec = LossSpec("manhattan")
            else:
                props = _copula_transform(informative, stats.beta(2.0, 2.0))
                noise = rng.beta(2.0, 2.0, size=(n, p_noise))
                data = np.hstack([props, noise])
                spec = LossSpec("bernoulli_ll")
        else:
            if v == 0:
                informative = rng.normal(SPHERICAL_MEANS[labels], MV_GAUSS_SD)
                noise = rng.normal(0.0, 1.0, size=(n, p_noise))
                data = np.hstack([informative, noise])
                spec = LossSpec("euclidean")
            elif v == 1:
                informative = rng.poisson(
                    MV_POISSON_MEANS[labels][:, None], size=(n, 10)
                )
                rates = rng.integers(1, 11, size=p_noise)
                noise = rng.poisson(rates[None, :], size=(n, p_noise))
                data = np.hstack([informative, noise]).astype(float)
                spec = LossSpec("manhattan")
            else:
                informative = rng.binomial(
                    1, MV_BERNOULLI_MEANS[labels][:, None], size=(n, 10)
                )
                probs = rng.uniform(0.2, 0.8, size=p_noise)
                noise = rng.binomial(1, probs[None, :], size=(n, p_noise))
                data = np.hstack([informative, noise]).astype(float)
                spec = LossSpec("bernoulli_ll")
        mask = np.zeros(p_total, dtype=bool)
        mask[:10] = True
        views.append(View(data, spec))
        masks.append(mask)
    return MultiViewSim(
        MultiViewDataset(tuple(views)), labels, tuple(masks), np.zeros(n, dtype=bool)
    )
