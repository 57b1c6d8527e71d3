import math

import numpy as np
import pytest

from strongcoreset.config import DEFAULT
from strongcoreset.dimreduce import dim_reduce_exact, irls_subspace
from strongcoreset.linalg_core import Subspace, orthonormalize
from strongcoreset.oracle_harness import (
    QueryFamily,
    low_rank_plus_noise,
    measure_distortion,
    true_subspace_cost,
)
from strongcoreset.subspace_coreset import (
    SubspaceCoreset,
    build_subspace_coreset,
    coreset_from_augmented,
    eval_subspace_cost,
    random_rank_k_subspaces,
    size_bound,
)


def scalar_eval(points, weights, p, V):
    total = 0.0
    for row, w in zip(points, weights):
        b, t = row[:-1], row[-1]
        r = b - V.basis @ (V.basis.T @ b)
        total += w**p * (float(r @ r) + t * t) ** (p / 2)
    return total ** (1 / p)


@pytest.fixture(scope="module")
def instance():
    return low_rank_plus_noise(300, 20, 3, 0.5, seed=7)


def test_eval_matches_scalar_oracle():
    rng = np.random.default_rng(0)
    pts = rng.standard_normal((15, 7))
    pts[:, -1] = np.abs(pts[:, -1])
    w = rng.random(15) + 0.1
    for p in (1.0, 1.5, 2.0):
        C = SubspaceCoreset(pts, w, p, 2)
        V = orthonormalize(rng.standard_normal((6, 2)))
        assert eval_subspace_cost(C, V) == pytest.approx(scalar_eval(pts, w, p, V), rel=1e-10)
        assert eval_subspace_cost(C, V, power=True) == pytest.approx(scalar_eval(pts, w, p, V) ** p, rel=1e-10)


def test_eval_full_space_leaves_only_tails():
    rng = np.random.default_rng(1)
    pts = np.abs(rng.standard_normal((5, 4)))
    w = rng.random(5) + 0.5
    C = SubspaceCoreset(pts, w, 1.0, 3)
    expected = np.sum(w * pts[:, -1])
    assert eval_subspace_cost(C, Subspace.full(3)) == pytest.approx(expected)


def test_eval_single_row_orthogonal_query():
    C = SubspaceCoreset(np.array([[3.0, 0.0, 4.0]]), np.ones(1), 2.0, 1)
    V = Subspace(np.array([[0.0], [1.0]]))
    assert eval_subspace_cost(C, V) == pytest.approx(5.0)


def test_eval_dimension_mismatch_and_validation():
    C = SubspaceCoreset(np.ones((2, 4)), np.ones(2), 1.0, 1)
    with pytest.raises(ValueError):
        eval_subspace_cost(C, Subspace.full(4))
    with pytest.raises(ValueError):
        SubspaceCoreset(np.ones((2, 4)), np.array([1.0, 0.0]), 1.0, 1)
    with pytest.raises(ValueError):
        SubspaceCoreset(np.ones((0, 4)), np.ones(0), 1.0, 1)


def test_identity_coreset_has_no_distortion(instance):
    # every row once, unit weights, exact reduction to the full space
    A = instance
    aug, _ = dim_reduce_exact(A, 20, 1.0, 1.0)
    C = SubspaceCoreset(aug.rows(), np.ones(A.shape[0]), 1.0, 3)
    fam = QueryFamily("rank_k_projection", 30, 1, 20, 3)
    rep = measure_distortion(lambda V: true_subspace_cost(A, V, 1.0), lambda V: eval_subspace_cost(C, V), fam)
    assert rep.max_rel_err <= 1e-10


def test_build_respects_size_bound_and_accuracy(instance):
    A = instance
    k, eps = 3, 0.3
    C = build_subspace_coreset(A, k, eps, 1.0, seed=1)
    assert C.s <= size_bound(k, eps)
    assert C.s <= math.ceil(DEFAULT.subspace_size_c * k * math.log(k / eps) / eps**4)
    fam = QueryFamily("rank_k_projection", 100, 2, 20, k)
    rep = measure_distortion(lambda V: true_subspace_cost(A, V, 1.0), lambda V: eval_subspace_cost(C, V), fam)
    assert rep.max_rel_err <= eps
    assert C.meta["validated"] and C.meta["validation_errors"][0] <= eps


def test_fast_variant(instance):
    A = instance
    C = build_subspace_coreset(A, 3, 0.3, 1.0, variant="fast", seed=2)
    assert C.meta["reduction"]["variant"] == "fast"
    V = orthonormalize(np.random.default_rng(3).standard_normal((20, 3)))
    t = true_subspace_cost(A, V, 1.0)
    assert abs(eval_subspace_cost(C, V) - t) <= 0.3 * t


def test_rank_k_input():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((80, 3)) @ rng.standard_normal((3, 12))
    C = build_subspace_coreset(A, 3, 0.5, 1.0, seed=0)
    # the optimal subspace has zero cost on both sides
    V = orthonormalize(np.linalg.svd(A, full_matrices=False)[2][:3].T)
    scale = np.sum(np.linalg.norm(A, axis=1))
    assert true_subspace_cost(A, V, 1.0) <= 1e-8 * scale
    assert eval_subspace_cost(C, V) <= 1e-6 * scale
    W = orthonormalize(rng.standard_normal((12, 3)))
    t = true_subspace_cost(A, W, 1.0)
    assert abs(eval_subspace_cost(C, W) - t) <= 0.5 * t


def test_all_zero_input():
    C = build_subspace_coreset(np.zeros((10, 4)), 2, 0.5, 2.0, seed=0)
    assert C.s == 1
    assert C.row_weights[0] == pytest.approx(10 ** 0.5)
    assert eval_subspace_cost(C, orthonormalize(np.eye(4)[:, :2])) == 0.0


def test_degenerate_augmented_all_zero():
    aug, _ = dim_reduce_exact(np.zeros((6, 3)), 1, 0.5, 1.0)
    C = coreset_from_augmented(aug, 1, 0.5, 1.0, seed=0)
    assert C.meta["degenerate"] and C.row_weights[0] == pytest.approx(6.0)


def test_p2_variant():
    A = low_rank_plus_noise(200, 10, 2, 0.5, seed=5)
    C = build_subspace_coreset(A, 2, 0.4, 2.0, seed=0)
    fam = QueryFamily("rank_k_projection", 50, 3, 10, 2)
    rep = measure_distortion(
        lambda V: true_subspace_cost(A, V, 2.0) ** 0.5, lambda V: eval_subspace_cost(C, V), fam
    )
    assert rep.max_rel_err <= 0.4


def test_adaptive_query_soundness(instance):
    # the coreset's own minimizer is nearly optimal for the data
    A = instance
    k, eps = 3, 0.3
    C = build_subspace_coreset(A, k, eps, 1.0, seed=3)
    V, _ = irls_subspace(C.projected, k, 1.0, row_weights=C.row_weights, offsets=C.tail, seed=1)
    best, _ = irls_subspace(A, k, 1.0, seed=1)
    assert true_subspace_cost(A, V, 1.0) <= (1 + 3 * eps) * true_subspace_cost(A, best, 1.0)


def test_oversampling_does_not_hurt_median_distortion(instance):
    A = instance
    fam = QueryFamily("rank_k_projection", 40, 9, 20, 3)
    medians = []
    for c in (0.05, 0.25):
        cfg = DEFAULT.replace(subspace_size_c=c)
        errs = []
        for seed in range(8):
            C = build_subspace_coreset(A, 3, 0.3, 1.0, seed=seed, validate=False, constants=cfg)
            rep = measure_distortion(
                lambda V: true_subspace_cost(A, V, 1.0), lambda V: eval_subspace_cost(C, V), fam
            )
            errs.append(rep.max_rel_err)
        medians.append(np.median(errs))
    assert medians[1] <= medians[0]


def test_deterministic_build(instance):
    a = build_subspace_coreset(instance, 3, 0.3, 1.0, seed=11)
    b = build_subspace_coreset(instance, 3, 0.3, 1.0, seed=11, threads=4)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.row_weights, b.row_weights)


def test_rejects_bad_params(instance):
    with pytest.raises(ValueError):
        build_subspace_coreset(instance, 0, 0.3, 1.0)
    with pytest.raises(ValueError):
        build_subspace_coreset(instance, 3, 0.3, 1.0, variant="other")


def test_random_rank_k_subspaces():
    qs = random_rank_k_subspaces(6, 2, 5, seed=0)
    assert len(qs) == 5 and all(q.ell == 2 for q in qs)


def test_eval_accepts_raw_matrix():
    rng = np.random.default_rng(12)
    A = rng.standard_normal((80, 6))
    C = build_subspace_coreset(A, 2, 0.5, 1.0, seed=0)
    M = rng.standard_normal((6, 2))
    assert eval_subspace_cost(C, M) == eval_subspace_cost(C, orthonormalize(M))
