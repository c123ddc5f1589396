"""Proximal operators used by every ADMM variant.

All operators solve argmin_x 0.5 ||x - v||^2 + t * h(x) for their respective
penalty h.  They are pure functions and rows/entries are independent, so
callers may apply them blockwise.
"""
from __future__ import annotations

import numpy as np

LQ_TOL = 1e-8
LQ_MAX_ITER = 200


def prox_group_l2(v: np.ndarray, t: float) -> np.ndarray:
    """Block soft-threshold: shrink the whole vector toward zero."""
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm <= t:
        return np.zeros_like(v)
    return (1.0 - t / norm) * v


def prox_l1(z: np.ndarray, t: float) -> np.ndarray:
    """Entrywise soft-threshold."""
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def project_l1_ball(u: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the l1 ball, by sort and threshold."""
    u = np.asarray(u, dtype=float)
    if np.abs(u).sum() <= radius:
        return u.copy()
    a = np.sort(np.abs(u))[::-1]
    cssa = np.cumsum(a) - radius
    ks = np.arange(1, len(a) + 1)
    valid = a - cssa / ks > 0
    rho = np.nonzero(valid)[0][-1]
    tau = cssa[rho] / (rho + 1.0)
    return np.sign(u) * np.maximum(np.abs(u) - tau, 0.0)


def prox_linf_row(v: np.ndarray, t: float) -> np.ndarray:
    """Prox of t * max_i |x_i| via the Moreau decomposition."""
    v = np.asarray(v, dtype=float)
    if t == 0:
        return v.copy()
    return v - t * project_l1_ball(v / t)


def _lq_dual_norm(v: np.ndarray, q: float) -> float:
    qstar = q / (q - 1.0)
    return float(np.linalg.norm(v, ord=qstar))


def _lq_shrink(a: np.ndarray, c: float, q: float) -> np.ndarray:
    """Solve y + c * y**(q-1) = a entrywise for y in [0, a], by bisection."""
    lo = np.zeros_like(a)
    hi = a.copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        too_big = mid + c * mid ** (q - 1.0) > a
        hi = np.where(too_big, mid, hi)
        lo = np.where(too_big, lo, mid)
    return 0.5 * (lo + hi)


def prox_lq_row(v: np.ndarray, t: float, q: float) -> np.ndarray:
    """Prox of t * ||x||_q for q in (1, inf), solved numerically.

    The optimum has the signs of v; its magnitudes solve a scalar fixed
    point in s = ||x||_q, found by bisection on s with entrywise inner
    solves.  Raises on non-convergence.
    """
    if not q > 1:
        raise ValueError("q must be > 1")
    v = np.asarray(v, dtype=float)
    if t == 0:
        return v.copy()
    if q == 2:
        return prox_group_l2(v, t)
    a = np.abs(v)
    if _lq_dual_norm(v, q) <= t:
        return np.zeros_like(v)
    s_hi = float(np.linalg.norm(v, ord=q))
    s_lo = 0.0
    s = s_hi
    y = a
    for it in range(LQ_MAX_ITER):
        s = 0.5 * (s_lo + s_hi)
        c = t / s ** (q - 1.0)
        y = _lq_shrink(a, c, q)
        gap = float(np.linalg.norm(y, ord=q)) - s
        if abs(gap) <= LQ_TOL * (1.0 + s):
            break
        if gap > 0:
            s_lo = s
        else:
            s_hi = s
    else:
        raise RuntimeError("prox_lq_row failed to converge")
    return np.sign(v) * y


def prox_hinge(z: np.ndarray, t: float) -> np.ndarray:
    """Prox of t * max(0, z), entrywise."""
    z = np.asarray(z, dtype=float)
    out = z.copy()
    out[z > t] = z[z > t] - t
    out[(z >= 0) & (z <= t)] = 0.0
    return out


def prox_fusion_rows(m: np.ndarray, t: float, w: np.ndarray) -> np.ndarray:
    """Rowwise group soft-threshold with per-row thresholds t * w."""
    m = np.asarray(m, dtype=float)
    w = np.asarray(w, dtype=float)
    norms = np.linalg.norm(m, axis=1)
    thresh = t * w
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > thresh, 1.0 - thresh / norms, 0.0)
    scale = np.where(thresh == 0, 1.0, scale)
    return m * scale[:, None]


def prox_cols_group(m: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Columnwise group soft-threshold with per-column thresholds."""
    m = np.asarray(m, dtype=float)
    thresholds = np.asarray(thresholds, dtype=float)
    norms = np.linalg.norm(m, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > thresholds, 1.0 - thresholds / norms, 0.0)
    scale = np.where(thresholds == 0, 1.0, scale)
    return m * scale[None, :]
