import math

import numpy as np
import pytest

from src.mi_graph.errors import DegenerateSampleError, EstimatorError
from src.mi_graph.estimators import (
    KSGEstimator,
    add_jitter,
    conditional_mutual_information,
    digamma,
    entropy,
    marginal_counts,
    mutual_information,
)

EULER_GAMMA = 0.5772156649015329
GAUSSIAN_MI_09 = -0.5 * math.log(1 - 0.81)


def test_digamma_values():
    assert digamma(1) == pytest.approx(-EULER_GAMMA, abs=1e-12)
    assert digamma(2) == pytest.approx(1 - EULER_GAMMA, abs=1e-12)
    assert digamma(10) == pytest.approx(2.2517525891, abs=1e-9)
    assert digamma(np.array([1.0, 2.0])).shape == (2,)


def test_digamma_rejects_non_positive():
    with pytest.raises(EstimatorError):
        digamma(0)
    with pytest.raises(EstimatorError):
        digamma(-1.5)


def test_entropy_uniform_and_normal(rng):
    assert entropy(rng.random(5000), k=3) == pytest.approx(0.0, abs=0.05)
    normal_h = 0.5 * math.log(2 * math.pi * math.e)
    assert entropy(rng.standard_normal(5000), k=3) == pytest.approx(normal_h, abs=0.05)


def test_entropy_requires_k_below_n():
    with pytest.raises(EstimatorError):
        entropy(np.arange(3.0), k=3)


def test_mi_gaussian_closed_form(gaussian_pair):
    x, y = gaussian_pair
    assert mutual_information(x, y, k=3) == pytest.approx(GAUSSIAN_MI_09, abs=0.05)


def test_mi_independent_uniforms(rng):
    x, y = rng.random(2000), rng.random(2000)
    assert abs(mutual_information(x, y, k=3)) < 0.02


def test_mi_identical_variables_is_large(rng):
    x = rng.random(2000)
    assert mutual_information(x, x.copy(), k=3) > 2.0


def test_mi_is_symmetric(gaussian_pair):
    x, y = gaussian_pair
    assert mutual_information(x, y, jitter=0.0) == mutual_information(y, x, jitter=0.0)


def test_mi_is_symmetric_with_jitter_on_tied_data(gaussian_pair):
    x, y = (np.round(a, 2) for a in gaussian_pair)
    assert mutual_information(x, y) == mutual_information(y, x)


def test_jitter_follows_the_column_not_its_position(rng):
    a, b = rng.standard_normal((2, 100))
    pair = add_jitter(np.column_stack([a, b]), 1e-10, seed=3)
    swapped = add_jitter(np.column_stack([b, a]), 1e-10, seed=3)
    assert np.array_equal(pair[:, 0], swapped[:, 1])
    assert np.array_equal(add_jitter(a, 1e-10, seed=3)[:, 0], pair[:, 0])


def test_mi_row_permutation_invariant(gaussian_pair, rng):
    x, y = gaussian_pair
    order = rng.permutation(x.shape[0])
    a = mutual_information(x, y, jitter=0.0)
    b = mutual_information(x[order], y[order], jitter=0.0)
    assert a == pytest.approx(b, abs=1e-12)


def test_mi_duplicates_without_jitter_are_degenerate():
    x = np.repeat(np.arange(10.0), 5)
    with pytest.raises(DegenerateSampleError):
        mutual_information(x, x, jitter=0.0)


def test_mi_duplicates_are_broken_by_jitter():
    x = np.repeat(np.arange(50.0), 4)
    y = np.tile(np.arange(4.0), 50)
    assert np.isfinite(mutual_information(x, y, jitter=1e-10))


def test_mi_row_mismatch():
    with pytest.raises(EstimatorError):
        mutual_information(np.zeros(10), np.zeros(9))


def test_cmi_conditionally_independent(rng):
    z = rng.standard_normal(2000)
    x = z + rng.standard_normal(2000)
    y = z + rng.standard_normal(2000)
    assert mutual_information(x, y) > 0.1
    assert conditional_mutual_information(x, y, z) == pytest.approx(0.0, abs=0.03)


def test_cmi_with_irrelevant_z(gaussian_pair, rng):
    x, y = gaussian_pair
    z = rng.standard_normal(x.shape[0])
    assert conditional_mutual_information(x, y, z) == pytest.approx(mutual_information(x, y), abs=0.1)


def test_cmi_empty_conditioning_delegates(gaussian_pair):
    x, y = gaussian_pair
    mi = mutual_information(x, y, seed=4)
    assert conditional_mutual_information(x, y, None, seed=4) == mi
    assert conditional_mutual_information(x, y, np.empty((x.shape[0], 0)), seed=4) == mi


def test_cmi_symmetric_in_x_and_y(rng):
    z = rng.standard_normal((400, 2))
    x = z[:, :1] + rng.standard_normal((400, 1))
    y = z[:, 1:] * x + rng.standard_normal((400, 1))
    a = conditional_mutual_information(x, y, z, jitter=0.0)
    b = conditional_mutual_information(y, x, z, jitter=0.0)
    assert a == pytest.approx(b, abs=1e-12)


def test_ksg_estimator_matches_function(rng):
    x, y, z = rng.standard_normal((3, 300, 1))
    estimator = KSGEstimator(x, z, k=3)
    assert estimator.conditional
    assert estimator.estimate(y) == conditional_mutual_information(x, y, z, jitter=0.0)
    assert KSGEstimator(x, None, k=3).estimate(y) == mutual_information(x, y, jitter=0.0)


def test_add_jitter_is_tiny_and_seeded(rng):
    a = rng.standard_normal((100, 2))
    j1 = add_jitter(a, 1e-10, seed=3)
    assert np.array_equal(j1, add_jitter(a, 1e-10, seed=3))
    assert not np.array_equal(j1, add_jitter(a, 1e-10, seed=4))
    assert np.max(np.abs(j1 - a)) < 1e-9
    assert np.array_equal(add_jitter(a, 0.0), a)


def test_marginal_counts_bounded_by_k(rng):
    x, y = rng.standard_normal((2, 200))
    counts = marginal_counts(x, y, k=3)
    assert np.all(counts["radius"] > 0)
    # the k-1 joint neighbours strictly inside the radius are also inside each marginal strip
    assert np.all(counts["n_x"] >= 2) and np.all(counts["n_y"] >= 2)
    z = rng.standard_normal(200)
    cond = marginal_counts(x, y, z, k=3)
    assert np.all(cond["n_z"] >= cond["n_xz"])
    assert np.all(cond["n_z"] >= cond["n_yz"])
