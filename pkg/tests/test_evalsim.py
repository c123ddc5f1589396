"""Clustering metrics and the simulation generators."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gecco import evalsim
from gecco.evalsim import adjusted_rand_index, f1_selection


# ---- adjusted Rand index -------------------------------------------------


def test_ari_identical_labelings():
    assert adjusted_rand_index([0, 0, 1, 1, 2], [5, 5, 7, 7, 9]) == pytest.approx(1.0)


def test_ari_one_cluster_vs_singletons():
    # Expected index equals the index, so the adjusted value is 0.
    a = np.zeros(6, dtype=int)
    b = np.arange(6)
    assert adjusted_rand_index(a, b) == pytest.approx(0.0)


def test_ari_crossed_pairs_hand_computed():
    # Contingency table of [1,1,2,2] vs [1,2,1,2] has four cells of 1:
    # sum_cells C(1,2) = 0; row/col pair sums are 2 and 2; n = 4 so C(4,2)=6.
    # expected = 2*2/6 = 2/3, max = 2, ARI = (0 - 2/3) / (2 - 2/3) = -1/2.
    assert adjusted_rand_index([1, 1, 2, 2], [1, 2, 1, 2]) == pytest.approx(-0.5)


def test_ari_matches_reference_implementation():
    sklearn = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = rng.integers(5, 40)
        a = rng.integers(0, 4, size=n)
        b = rng.integers(0, 5, size=n)
        assert adjusted_rand_index(a, b) == pytest.approx(
            sklearn.adjusted_rand_score(a, b), abs=1e-12
        )


def test_ari_length_mismatch():
    with pytest.raises(ValueError):
        adjusted_rand_index([0, 1], [0, 1, 2])


@given(seed=st.integers(0, 100000))
@settings(max_examples=40, deadline=None)
def test_ari_bounds_symmetry_permutation(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 25))
    a = rng.integers(0, 4, size=n)
    b = rng.integers(0, 4, size=n)
    val = adjusted_rand_index(a, b)
    assert val <= 1.0 + 1e-12
    assert val == pytest.approx(adjusted_rand_index(b, a))
    perm = rng.permutation(5)
    assert val == pytest.approx(adjusted_rand_index(perm[a], b))
    assert adjusted_rand_index(a, a) == pytest.approx(1.0)


# ---- F1 -------------------------------------------------------------------


def test_f1_perfect():
    m = np.array([True, False, True])
    assert f1_selection(m, m) == 1.0


def test_f1_disjoint():
    assert f1_selection([True, False], [False, True]) == 0.0


def test_f1_partial():
    truth = np.zeros(20, dtype=bool)
    truth[:10] = True
    sel = np.zeros(20, dtype=bool)
    sel[:8] = True  # 8 of 10 found
    sel[10:12] = True  # 2 false positives
    assert f1_selection(sel, truth) == pytest.approx(0.8)


def test_f1_nothing_predicted():
    truth = np.array([True, True, False])
    assert f1_selection(np.zeros(3, dtype=bool), truth) == 0.0


# ---- generators -----------------------------------------------------------


def test_spherical_means_and_proportions():
    sim = evalsim.simulate_spherical(n=300, p_noise=0, outlier_frac=0.0, seed=1)
    assert sim.data.shape == (300, 10)
    for g in range(3):
        got = sim.data[sim.labels == g].mean(axis=0)
        se = 3.0 / np.sqrt(100)
        assert np.abs(got - evalsim.SPHERICAL_MEANS[g]).max() <= 3 * se
    assert np.array_equal(np.bincount(sim.labels), [100, 100, 100])


def test_spherical_reproducible():
    a = evalsim.simulate_spherical(seed=7)
    b = evalsim.simulate_spherical(seed=7)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(a.outliers, b.outliers)


def test_spherical_requires_divisible_n():
    with pytest.raises(ValueError):
        evalsim.simulate_spherical(n=100)


def test_spherical_outlier_count():
    sim = evalsim.simulate_spherical(n=120, outlier_frac=0.05, seed=3)
    assert sim.outliers.sum() == 6  # 2 per group


def test_halfmoons_on_unit_arcs_without_noise():
    sim = evalsim.simulate_halfmoons(n=90, p_noise=0, outlier_frac=0.0, noise_sd=0.0, seed=2)
    assert sim.data.shape == (90, 10)
    for pair in range(5):
        xy = sim.data[:, 2 * pair : 2 * pair + 2]
        centers = evalsim._MOON_CENTERS[sim.labels]
        r = np.linalg.norm(xy - centers, axis=1)
        assert np.abs(r - 1.0).max() <= 1e-9
    assert np.array_equal(sim.informative, np.ones(10, dtype=bool))


def test_halfmoons_reproducible_and_mask():
    a = evalsim.simulate_halfmoons(seed=5)
    b = evalsim.simulate_halfmoons(seed=5)
    assert np.array_equal(a.data, b.data)
    assert a.informative.sum() == 10
    assert a.informative[:10].all()


def test_poisson_group_means():
    sim = evalsim.simulate_poisson(n=300, p_noise=5, seed=4)
    assert np.all(sim.data >= 0)
    assert np.all(sim.data == np.round(sim.data))
    for g, mu in enumerate([1.0, 4.0, 7.0]):
        got = sim.data[sim.labels == g][:, :10].mean()
        assert abs(got - mu) <= 3 * np.sqrt(mu / 1000)


def test_poisson_reproducible():
    a = evalsim.simulate_poisson(seed=6)
    b = evalsim.simulate_poisson(seed=6)
    assert np.array_equal(a.data, b.data)


@pytest.mark.parametrize(
    "scenario,dims",
    [("s1", (10, 10, 10)), ("s3", (200, 100, 50)), ("s5", (50, 200, 100))],
)
def test_multiview_dims(scenario, dims):
    sim = evalsim.simulate_multiview(scenario, seed=0)
    assert sim.dataset.widths == dims
    assert sim.dataset.n == 120
    for mask in sim.informative:
        assert mask.sum() == 10 and mask[:10].all()


def test_multiview_binary_view_domain():
    sim = evalsim.simulate_multiview("s1", seed=1)
    binary = sim.dataset.views[2].data
    assert set(np.unique(binary)) <= {0.0, 1.0}
    halfmoon = evalsim.simulate_multiview("s2", seed=1)
    props = halfmoon.dataset.views[2].data
    assert props.min() >= 0.0 and props.max() <= 1.0


def test_multiview_counts_nonnegative_integer():
    sim = evalsim.simulate_multiview("s2", seed=2)
    counts = sim.dataset.views[1].data
    assert np.all(counts >= 0) and np.all(counts == np.round(counts))


def test_multiview_shared_labels_and_reproducibility():
    a = evalsim.simulate_multiview("s4", seed=3)
    b = evalsim.simulate_multiview("s4", seed=3)
    for va, vb in zip(a.dataset.views, b.dataset.views):
        assert np.array_equal(va.data, vb.data)
    assert np.array_equal(a.labels, b.labels)
    assert len(a.labels) == 120


def test_multiview_custom_dims():
    sim = evalsim.simulate_multiview("s3", seed=0, dims=(60, 30, 15))
    assert sim.dataset.widths == (60, 30, 15)
