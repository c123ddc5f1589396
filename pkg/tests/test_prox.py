"""Proximal operators against numeric minimization oracles."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from gecco import prox

RNG = np.random.default_rng(20)


def prox_objective(x, v, penalty):
    return 0.5 * np.sum((np.asarray(x) - v) ** 2) + penalty(np.asarray(x))


def powell_oracle(v, penalty, x0=None):
    """Dense numeric minimization of the prox objective."""
    res = optimize.minimize(
        lambda x: prox_objective(x, v, penalty),
        v if x0 is None else x0,
        method="Powell",
        options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 20000},
    )
    return res.x


# ---- prox_group_l2 -------------------------------------------------------


def test_group_l2_zero_vector():
    assert np.all(prox.prox_group_l2(np.zeros(4), 2.0) == 0)


def test_group_l2_kills_small_norm():
    assert np.all(prox.prox_group_l2(np.array([3.0, 4.0]), 10.0) == 0)


def test_group_l2_shrink_example():
    # Oracle: numeric minimization of 0.5||x - v||^2 + t ||x||_2.
    v = np.array([3.0, 4.0])
    xo = powell_oracle(v, lambda x: 1.0 * np.linalg.norm(x))
    got = prox.prox_group_l2(v, 1.0)
    assert np.allclose(got, [2.4, 3.2], atol=1e-12)
    assert np.allclose(xo, got, atol=1e-6)


# ---- prox_l1 -------------------------------------------------------------


def test_l1_zero():
    assert np.all(prox.prox_l1(np.zeros((2, 2)), 1.0) == 0)


def test_l1_scalar():
    assert prox.prox_l1(np.array([2.5]), 1.0)[0] == pytest.approx(1.5)


def test_l1_matches_entrywise_golden_section():
    rng = np.random.default_rng(0)
    Z = rng.normal(0, 2, size=(4, 3))
    t = 0.3
    got = prox.prox_l1(Z, t)
    for idx in np.ndindex(Z.shape):
        z = Z[idx]
        res = optimize.minimize_scalar(
            lambda x: 0.5 * (x - z) ** 2 + t * abs(x),
            bounds=(z - 2 * t - 1, z + 2 * t + 1),
            method="bounded",
            options={"xatol": 1e-12},
        )
        assert got[idx] == pytest.approx(res.x, abs=1e-6)


# ---- prox_linf_row -------------------------------------------------------


def test_linf_degenerate_small_ball():
    v = np.array([0.3, -0.2])
    assert np.allclose(prox.prox_linf_row(v, 1.0), 0.0)


def test_linf_reduces_max_coordinate():
    got = prox.prox_linf_row(np.array([3.0, 1.0]), 1.0)
    assert np.allclose(got, [2.0, 1.0], atol=1e-12)
    xo = powell_oracle(np.array([3.0, 1.0]), lambda x: np.abs(x).max())
    assert np.allclose(xo, got, atol=1e-5)


def test_linf_splits_tied_coordinates():
    got = prox.prox_linf_row(np.array([2.0, 2.0]), 1.0)
    assert np.allclose(got, [1.5, 1.5], atol=1e-12)


def test_moreau_identity_exact():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = rng.normal(0, 2, size=5)
        t = rng.uniform(0.2, 3.0)
        p = prox.prox_linf_row(v, t)
        back = p + t * prox.project_l1_ball(v / t)
        np.testing.assert_allclose(back, v, rtol=0, atol=1e-13)


# ---- prox_lq_row ---------------------------------------------------------


def test_lq_q2_matches_group_l2():
    rng = np.random.default_rng(2)
    for _ in range(20):
        v = rng.normal(0, 2, size=4)
        t = rng.uniform(0.1, 2.0)
        assert np.allclose(prox.prox_lq_row(v, t, 2.0), prox.prox_group_l2(v, t), atol=1e-8)


def test_lq_zero_vector():
    assert np.all(prox.prox_lq_row(np.zeros(3), 1.0, 3.0) == 0)


def test_lq_q3_matches_grid_oracle():
    # Oracle: dense 2-d grid minimization of 0.5||x - v||^2 + t ||x||_3.
    v = np.array([1.0, 2.0])
    t = 0.5
    grid = np.linspace(-0.5, 2.5, 601)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    norms = (np.abs(gx) ** 3 + np.abs(gy) ** 3) ** (1.0 / 3.0)
    obj = 0.5 * ((gx - v[0]) ** 2 + (gy - v[1]) ** 2) + t * norms
    best = np.unravel_index(obj.argmin(), obj.shape)
    coarse = np.array([gx[best], gy[best]])
    got = prox.prox_lq_row(v, t, 3.0)
    assert np.allclose(got, coarse, atol=2 * (grid[1] - grid[0]))
    xo = powell_oracle(v, lambda x: t * np.linalg.norm(x, 3))
    assert prox_objective(got, v, lambda x: t * np.linalg.norm(x, 3)) <= prox_objective(
        xo, v, lambda x: t * np.linalg.norm(x, 3)
    ) + 1e-9


@pytest.mark.parametrize("q", [1.5, 3.0, 6.0])
def test_lq_optimality_against_perturbations(q):
    rng = np.random.default_rng(3)
    for _ in range(10):
        v = rng.normal(0, 1.5, size=4)
        t = rng.uniform(0.1, 1.5)
        x = prox.prox_lq_row(v, t, q)
        f0 = prox_objective(x, v, lambda z: t * np.linalg.norm(z, q))
        for _ in range(50):
            e = rng.normal(size=4)
            e *= 1e-4 / np.linalg.norm(e)
            assert prox_objective(x + e, v, lambda z: t * np.linalg.norm(z, q)) >= f0 - 1e-12


# ---- prox_hinge ----------------------------------------------------------


def test_hinge_negative_untouched():
    assert prox.prox_hinge(np.array([-1.0]), 5.0)[0] == -1.0


def test_hinge_dead_zone():
    assert prox.prox_hinge(np.array([0.5]), 1.0)[0] == 0.0


def test_hinge_shift():
    z = 3.0
    got = prox.prox_hinge(np.array([z]), 1.0)[0]
    res = optimize.minimize_scalar(
        lambda x: 0.5 * (x - z) ** 2 + 1.0 * max(0.0, x),
        bounds=(-1, 4),
        method="bounded",
        options={"xatol": 1e-12},
    )
    assert got == pytest.approx(2.0)
    assert got == pytest.approx(res.x, abs=1e-6)


# ---- prox_fusion_rows ----------------------------------------------------


def test_fusion_rows_zero():
    m = np.zeros((3, 4))
    assert np.all(prox.prox_fusion_rows(m, 1.0, np.ones(3)) == 0)


def test_fusion_rows_single_row():
    got = prox.prox_fusion_rows(np.array([[3.0, 4.0]]), 1.0, np.array([1.0]))
    assert np.allclose(got, [[2.4, 3.2]])


def test_fusion_rows_zero_weight_identity():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    got = prox.prox_fusion_rows(m, 5.0, np.array([0.0, 1.0]))
    assert np.array_equal(got[0], m[0])


# ---- shared properties ---------------------------------------------------

OPERATORS = [
    ("group_l2", lambda v, t: prox.prox_group_l2(v, t)),
    ("l1", lambda v, t: prox.prox_l1(v, t)),
    ("linf", lambda v, t: prox.prox_linf_row(v, t)),
    ("lq3", lambda v, t: prox.prox_lq_row(v, t, 3.0)),
    ("hinge", lambda v, t: prox.prox_hinge(v, t)),
]


@pytest.mark.parametrize("name,op", OPERATORS)
@given(seed=st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_nonexpansiveness(name, op, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(0, 2, size=5)
    b = rng.normal(0, 2, size=5)
    t = rng.uniform(0.1, 3.0)
    assert np.linalg.norm(op(a, t) - op(b, t)) <= np.linalg.norm(a - b) + 1e-12


PENALTIES = {
    "group_l2": lambda x, t: t * np.linalg.norm(x),
    "l1": lambda x, t: t * np.abs(x).sum(),
    "linf": lambda x, t: t * np.abs(x).max(),
    "lq3": lambda x, t: t * np.linalg.norm(x, 3),
    "hinge": lambda x, t: t * np.maximum(0, x).sum(),
}


@pytest.mark.parametrize("name,op", OPERATORS)
def test_perturbation_optimality(name, op):
    rng = np.random.default_rng(33)
    pen = PENALTIES[name]
    for _ in range(8):
        v = rng.normal(0, 2, size=5)
        t = rng.uniform(0.1, 2.0)
        x = op(v, t)
        f0 = prox_objective(x, v, lambda z: pen(z, t))
        for _ in range(50):
            e = rng.normal(size=5)
            e *= 1e-4 / np.linalg.norm(e)
            assert prox_objective(x + e, v, lambda z: pen(z, t)) >= f0 - 1e-12
