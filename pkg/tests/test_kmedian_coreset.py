import math

import numpy as np
import pytest

from strongcoreset.config import DEFAULT
from strongcoreset.kmedian_coreset import (
    WeightedCoreset,
    bicriteria_kmedian,
    build_kmedian_coreset,
    eval_kmedian_cost,
    local_search_kmedian,
    sensitivities,
    size_bound,
    weighted_kmedian_cost,
)
from strongcoreset.linalg_core import CenterSet
from strongcoreset.oracle_harness import QueryFamily, measure_distortion, planted_clusters, true_kmedian_cost


def scalar_eval(points, weights, centers):
    total = 0.0
    for row, w in zip(points, weights):
        b, t = row[:-1], row[-1]
        d2 = min(float((b - c) @ (b - c)) for c in centers)
        total += w * math.sqrt(d2 + t * t)
    return total


@pytest.fixture(scope="module")
def clusters():
    return planted_clusters(300, 12, 3, seed=5)


def test_eval_matches_scalar_oracle():
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((20, 5))
    pts[:, -1] = np.abs(pts[:, -1])
    w = rng.random(20)
    C = WeightedCoreset(pts, w, 3, 0.3)
    centers = rng.standard_normal((3, 4))
    assert eval_kmedian_cost(C, centers) == pytest.approx(scalar_eval(pts, w, centers), rel=1e-10)


def test_identity_coreset_matches_truth(clusters):
    X = clusters
    C = WeightedCoreset(np.hstack([X, np.zeros((X.shape[0], 1))]), np.ones(X.shape[0]), 3, 0.0)
    fam = QueryFamily.bounding_box(X, 30, 1, 3)
    rep = measure_distortion(lambda c: true_kmedian_cost(X, c), lambda c: eval_kmedian_cost(C, c), fam)
    assert rep.max_rel_err <= 1e-10


def test_eval_validation():
    C = WeightedCoreset(np.ones((2, 3)), np.ones(2), 1, 0.5)
    with pytest.raises(ValueError):
        eval_kmedian_cost(C, np.ones((1, 3)))
    with pytest.raises(ValueError):
        WeightedCoreset(np.ones((2, 3)), -np.ones(2), 1, 0.5)
    with pytest.raises(ValueError):
        WeightedCoreset(np.ones((0, 3)), np.ones(0), 1, 0.5)


def test_sensitivity_total_bounded(clusters):
    centers = bicriteria_kmedian(clusters, 3, seed=0)
    prof = sensitivities(clusters, centers)
    assert prof.total <= 3 + 1 + 1e-9
    assert prof.total <= DEFAULT.sensitivity_total_c * 3
    assert np.all(prof.sensitivities > 0)


def test_bicriteria_constant_factor(clusters):
    centers = bicriteria_kmedian(clusters, 3, seed=1)
    best = local_search_kmedian(clusters, 3, seed=1)
    assert weighted_kmedian_cost(clusters, centers.centers) <= 3 * weighted_kmedian_cost(clusters, best.centers)


def test_bicriteria_single_point_and_k_above_n():
    assert bicriteria_kmedian(np.array([[1.0, 2.0]]), 1).k == 1
    X = np.arange(6.0).reshape(3, 2)
    assert weighted_kmedian_cost(X, bicriteria_kmedian(X, 5, seed=0).centers) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        bicriteria_kmedian(X, 0)


def test_weiszfeld_geometric_median():
    # collinear symmetric points: the median is the middle point
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    c = bicriteria_kmedian(X, 1, seed=0).centers[0]
    assert np.allclose(c, [1.0, 0.0], atol=1e-5)


def test_build_size_mass_accuracy(clusters):
    X = clusters
    k, eps = 3, 0.3
    C = build_kmedian_coreset(X, k, eps, seed=0)
    assert C.s <= size_bound(k, eps)
    assert C.weights.sum() == pytest.approx(X.shape[0], rel=0.1)
    fam = QueryFamily.bounding_box(X, 100, 2, k)
    rep = measure_distortion(lambda c: true_kmedian_cost(X, c), lambda c: eval_kmedian_cost(C, c), fam)
    assert rep.max_rel_err <= eps


def test_all_points_at_a_center_cost_zero():
    X = np.repeat(np.eye(3), 20, axis=0)
    C = build_kmedian_coreset(X, 3, 0.5, seed=1)
    assert eval_kmedian_cost(C, np.eye(3)) == pytest.approx(0.0, abs=1e-6)
    assert true_kmedian_cost(X, CenterSet(np.eye(3))) == 0.0


def test_deterministic_build(clusters):
    a = build_kmedian_coreset(clusters, 3, 0.4, seed=4, threads=1)
    b = build_kmedian_coreset(clusters, 3, 0.4, seed=4, threads=4)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)


def test_local_search_respects_tails():
    # a large tail on every point does not change the best centers in R^d
    X = np.vstack([np.zeros((10, 2)), np.full((10, 2), 5.0)])
    c0 = local_search_kmedian(X, 2, seed=0).centers
    c1 = local_search_kmedian(X, 2, seed=0, tails=np.full(20, 3.0)).centers
    key = lambda c: sorted(map(tuple, np.round(c, 4)))
    assert key(c0) == key(c1)
