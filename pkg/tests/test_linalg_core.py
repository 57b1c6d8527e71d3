import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from strongcoreset.linalg_core import (
    CenterSet,
    PointMatrix,
    Subspace,
    complement,
    cost_p,
    dist_to_centers,
    nearest_centers,
    norm_p2,
    orthonormalize,
    project,
    span_union,
)
from strongcoreset.oracle_harness import true_kmedian_cost, true_subspace_cost

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def naive_norm_p2(M, p):
    return sum(sum(x * x for x in row) ** (p / 2) for row in M) ** (1 / p)


# oracles first -----------------------------------------------------------


def test_cost_p_matches_oracle_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n, d = rng.integers(1, 30), rng.integers(2, 8)
        m = rng.integers(0, d + 1)
        A = rng.standard_normal((n, d))
        S = orthonormalize(rng.standard_normal((d, m))) if m else Subspace.zero(d)
        p = rng.choice([1.0, 1.5, 2.0, 3.0])
        assert cost_p(A, S, p) == pytest.approx(true_subspace_cost(A, S, p), rel=1e-10, abs=1e-12)


def test_norm_p2_matches_scalar_loop():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((7, 3))
    for p in (1.0, 2.0, 3.5):
        assert norm_p2(M, p) == pytest.approx(naive_norm_p2(M.tolist(), p), rel=1e-12)


def test_norm_p2_large_p_does_not_overflow():
    M = np.full((3, 2), 1e200)
    assert np.isfinite(norm_p2(M, 8.0))


def test_nearest_centers_matches_scan():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((50, 4))
    C = rng.standard_normal((5, 4))
    _, dist = nearest_centers(X, C)
    assert dist.sum() == pytest.approx(true_kmedian_cost(X, CenterSet(C)), rel=1e-10)


# PointMatrix -------------------------------------------------------------


def test_identity_from_triplets_stays_sparse_or_dense_by_density():
    I = PointMatrix.from_triplets(2, 2, [0, 1], [0, 1], [1.0, 1.0])
    assert I.shape == (2, 2)
    assert not I.is_sparse  # density 0.5 > 0.25
    big = PointMatrix.from_triplets(100, 100, np.arange(100), np.arange(100), np.ones(100))
    assert big.is_sparse and big.nnz == 100


def test_triplets_with_no_entries_give_zero_matrix():
    Z = PointMatrix.from_triplets(3, 4, [], [], [])
    assert Z.nnz == 0
    assert np.array_equal(Z.to_dense(), np.zeros((3, 4)))


def test_duplicate_triplets_are_summed():
    M = PointMatrix.from_triplets(1, 2, [0, 0], [1, 1], [1.5, 2.0])
    assert M.to_dense()[0, 1] == 3.5


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(ValueError):
        PointMatrix(np.array([[1.0, bad]]))
    with pytest.raises(ValueError):
        PointMatrix.from_triplets(1, 2, [0], [0], [bad])


def test_out_of_range_triplet_rejected():
    with pytest.raises(ValueError):
        PointMatrix.from_triplets(2, 2, [2], [0], [1.0])


def test_dense_and_sparse_paths_agree():
    rng = np.random.default_rng(3)
    D = rng.standard_normal((40, 30)) * (rng.random((40, 30)) < 0.05)
    S = sp.csr_matrix(D)
    Pd, Ps = PointMatrix(D), PointMatrix(S)
    assert Ps.is_sparse and not Pd.is_sparse
    B = rng.standard_normal((30, 3))
    assert np.allclose(Pd.matmul(B), Ps.matmul(B))
    assert np.allclose(Pd.row_sq_norms(), Ps.row_sq_norms())
    V = orthonormalize(B)
    assert cost_p(Pd, V, 1.0) == pytest.approx(cost_p(Ps, V, 1.0), rel=1e-12)


def test_point_matrix_is_read_only():
    P = PointMatrix(np.ones((2, 2)))
    with pytest.raises(ValueError):
        P.to_dense()[0, 0] = 5.0


# Subspace ----------------------------------------------------------------


def test_subspace_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_orthonormalize_drops_dependent_columns():
    V = np.array([[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]])
    S = orthonormalize(V)
    assert S.ell == 2
    assert np.allclose(S.basis.T @ S.basis, np.eye(2), atol=1e-12)


def test_complement_and_union():
    rng = np.random.default_rng(4)
    S = orthonormalize(rng.standard_normal((5, 2)))
    Q = complement(S)
    assert Q.ell == 3
    assert np.allclose(S.basis.T @ Q.basis, 0.0, atol=1e-12)
    U = span_union(S, Q)
    assert U.ell == 5
    assert span_union(S, S.basis).ell == 2


def test_cost_full_and_zero_subspace():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((10, 4))
    assert cost_p(A, Subspace.full(4), 1.0) == pytest.approx(0.0, abs=1e-12)
    assert cost_p(A, Subspace.zero(4), 1.0) == pytest.approx(norm_p2(A, 1.0), rel=1e-12)


def test_rows_inside_subspace_have_tiny_residual():
    rng = np.random.default_rng(6)
    S = orthonormalize(rng.standard_normal((6, 2)))
    A = rng.standard_normal((8, 2)) @ S.basis.T * 1e6
    assert cost_p(A, S, 2.0) <= 1e-12 * np.sum(A * A)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        cost_p(np.ones((2, 3)), Subspace.full(4), 1.0)
    with pytest.raises(ValueError):
        project(np.ones((2, 3)), Subspace.full(4))
    with pytest.raises(ValueError):
        dist_to_centers(np.ones(3), CenterSet(np.ones((1, 4))))


def test_center_set_requires_nonempty():
    with pytest.raises(ValueError):
        CenterSet(np.zeros((0, 3)))


def test_dist_to_centers_ties_pick_lowest_index():
    j, dist = dist_to_centers([0.0, 0.0], CenterSet([[1.0, 0.0], [-1.0, 0.0]]))
    assert j == 0 and dist == 1.0


# properties --------------------------------------------------------------


@given(arrays(np.float64, (6, 3), elements=finite), st.floats(0.01, 100), st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_cost_homogeneity(A, lam, p):
    S = orthonormalize(np.array([[1.0], [1.0], [0.0]]))
    base = cost_p(A, S, p)
    assert cost_p(lam * A, S, p) == pytest.approx(lam**p * base, rel=1e-9, abs=1e-9 * (1 + lam**p * base))


@given(arrays(np.float64, (5, 4), elements=finite), st.integers(0, 2**32 - 1))
def test_pythagorean_identity(A, seed):
    S = orthonormalize(np.random.default_rng(seed).standard_normal((4, 2)))
    coeffs, _ = project(A, S)
    total = np.sum(A * A)
    assert cost_p(A, S, 2.0) + np.sum(coeffs * coeffs) == pytest.approx(total, rel=1e-9, abs=1e-9)


@given(arrays(np.float64, (4, 3), elements=finite), st.integers(0, 2**32 - 1))
def test_cost_invariant_under_orthogonal_rotation(A, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    S = orthonormalize(rng.standard_normal((3, 1)))
    rotated = Subspace(np.linalg.qr(Q @ S.basis)[0])
    scale = 1 + np.sum(A * A)
    assert cost_p(A @ Q.T, rotated, 1.0) == pytest.approx(cost_p(A, S, 1.0), rel=1e-8, abs=1e-9 * scale)
