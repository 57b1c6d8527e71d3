import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from strongcoreset.linalg_core import PointMatrix, Subspace, orthonormalize
from strongcoreset.oracle_harness.suites import duplicate_split_error, l1_embedding_trial, lewis_vs_leverage
from strongcoreset.sketching import (
    CountSketchSpec,
    DegenerateSketchError,
    build_sampling_matrix,
    countsketch_apply,
    default_repeats,
    exact_leverage_scores,
    leverage_scores_approx,
    lewis_weights,
    median_residuals,
    regression_width,
    sketched_coefficients,
    sketched_regression,
)


def svd_leverage(M):
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    U = U[:, s > 1e-10 * s[0]]
    return np.sum(U * U, axis=1)


def exact_residuals(A, S):
    return np.linalg.norm(A - (A @ S.basis) @ S.basis.T, axis=1)


# CountSketch -------------------------------------------------------------


def test_countsketch_matches_explicit_matrix():
    rng = np.random.default_rng(0)
    spec = CountSketchSpec.create(7, 30, seed=3)
    M = rng.standard_normal((30, 4))
    assert np.allclose(countsketch_apply(spec, M), spec.matrix() @ M)


def test_countsketch_one_nonzero_per_column():
    spec = CountSketchSpec.create(5, 40, seed=1)
    S = spec.matrix().toarray()
    assert np.all(np.count_nonzero(S, axis=0) == 1)
    assert set(np.unique(S[S != 0])) <= {-1.0, 1.0}


def test_countsketch_sparse_input_agrees_with_dense():
    rng = np.random.default_rng(1)
    D = rng.standard_normal((50, 40)) * (rng.random((50, 40)) < 0.05)
    spec = CountSketchSpec.create(9, 50, seed=2)
    P = PointMatrix(sp.csr_matrix(D))
    assert P.is_sparse
    assert np.allclose(countsketch_apply(spec, P), countsketch_apply(spec, D))


@given(
    arrays(np.float64, (12, 3), elements=st.integers(-1000, 1000).map(float)),
    arrays(np.float64, (12, 3), elements=st.integers(-1000, 1000).map(float)),
    st.integers(0, 2**32 - 1),
)
def test_countsketch_linear_bit_for_bit(M1, M2, seed):
    # integer-valued entries keep every partial sum exact
    spec = CountSketchSpec.create(4, 12, seed)
    lhs = countsketch_apply(spec, M1 + M2)
    rhs = countsketch_apply(spec, M1) + countsketch_apply(spec, M2)
    assert np.array_equal(lhs, rhs)


def test_countsketch_deterministic_given_seed():
    a = CountSketchSpec.create(6, 20, 11)
    b = CountSketchSpec.create(6, 20, 11)
    assert np.array_equal(a.hash, b.hash) and np.array_equal(a.sign, b.sign)


def test_countsketch_size_mismatch():
    spec = CountSketchSpec.create(3, 5, 0)
    with pytest.raises(ValueError):
        countsketch_apply(spec, np.ones((4, 2)))
    with pytest.raises(ValueError):
        CountSketchSpec.create(0, 5, 0)


def test_compressed_sketch_preserves_products():
    rng = np.random.default_rng(2)
    spec = CountSketchSpec.create(50, 12, seed=4)
    R, occupied = spec.compressed()
    x = rng.standard_normal(12)
    full = spec.matrix().toarray()
    assert np.allclose(x @ R, (full @ x)[occupied])
    assert np.linalg.norm(x @ R) == pytest.approx(np.linalg.norm(full @ x))


# sketched regression -----------------------------------------------------


def test_regression_width_formula():
    assert regression_width(3, 0.5) == 20 * 9 * 4
    assert regression_width(0, 0.5) >= 0


def test_sketched_regression_exact_for_rows_in_span():
    rng = np.random.default_rng(3)
    S = orthonormalize(rng.standard_normal((20, 3)))
    A = rng.standard_normal((10, 3)) @ S.basis.T
    spec = CountSketchSpec.create(15, 20, 5)
    assert np.all(sketched_regression(A, S, spec) <= 1e-10 * np.linalg.norm(A, axis=1))
    X = sketched_coefficients(A, S, spec)
    assert np.allclose(X @ S.basis.T, A, atol=1e-10)


def test_sketched_regression_width_below_rank_raises():
    S = Subspace(np.eye(6)[:, :4])
    with pytest.raises(ValueError):
        sketched_regression(np.ones((2, 6)), S, CountSketchSpec.create(3, 6, 0))


def test_zero_dimensional_subspace_gives_sketched_norms():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((5, 8))
    spec = CountSketchSpec.create(100, 8, 1)
    est = sketched_regression(A, Subspace.zero(8), spec)
    R, _ = spec.compressed()
    assert np.allclose(est, np.linalg.norm(A @ R, axis=1))


def test_median_residuals_default_width_accurate():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((100, 30))
    S = orthonormalize(rng.standard_normal((30, 6)))
    est = median_residuals(A, S, 0.25, seed=9)
    assert np.max(np.abs(est - exact_residuals(A, S)) / exact_residuals(A, S)) <= 0.25


def test_median_residuals_narrow_width_is_approximate_but_bounded():
    rng = np.random.default_rng(6)
    A = rng.standard_normal((200, 400))
    S = orthonormalize(rng.standard_normal((400, 4)))
    est = median_residuals(A, S, 0.5, seed=1, width=150)
    rel = np.abs(est - exact_residuals(A, S)) / exact_residuals(A, S)
    assert 0 < np.median(rel) and np.max(rel) <= 0.5


def test_median_residuals_thread_count_does_not_change_output():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((60, 50))
    S = orthonormalize(rng.standard_normal((50, 3)))
    one = median_residuals(A, S, 0.5, seed=2, width=30, threads=1)
    many = median_residuals(A, S, 0.5, seed=2, width=30, threads=4)
    assert np.array_equal(one, many)


def test_median_residuals_validation():
    S = Subspace(np.eye(3)[:, :1])
    with pytest.raises(ValueError):
        median_residuals(np.ones((2, 3)), S, 0.0)
    with pytest.raises(ValueError):
        median_residuals(np.ones((2, 4)), S, 0.5)
    with pytest.raises(ValueError):
        median_residuals(np.ones((2, 3)), S, 0.5, repeats=0)
    assert default_repeats(100) == int(np.ceil(8 * np.log(100)))


# leverage scores ---------------------------------------------------------


def test_exact_leverage_matches_svd_and_sums_to_rank():
    rng = np.random.default_rng(8)
    M = rng.standard_normal((50, 5)) @ rng.standard_normal((5, 7))  # rank 5
    lev = exact_leverage_scores(M)
    assert np.allclose(lev, svd_leverage(M), atol=1e-10)
    assert lev.sum() == pytest.approx(5.0)


def test_leverage_approx_within_constant_factor():
    rng = np.random.default_rng(9)
    M = rng.standard_normal((400, 4)) * rng.standard_cauchy((400, 1))
    approx = leverage_scores_approx(M, seed=3)
    ratio = approx / svd_leverage(M)
    assert 0.25 <= ratio.min() and ratio.max() <= 4.0


def test_leverage_approx_rejects_rank_deficient():
    M = np.zeros((30, 3))
    M[:, 0] = 1.0
    with pytest.raises(DegenerateSketchError):
        leverage_scores_approx(M)


# Lewis weights -----------------------------------------------------------


def test_lewis_p2_equals_leverage():
    assert lewis_vs_leverage(0) <= 1e-6
    rng = np.random.default_rng(10)
    M = rng.standard_normal((80, 3))
    assert np.allclose(lewis_weights(M, 2.0, exact=True).w, svd_leverage(M), rtol=1e-6)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
def test_lewis_fixed_point(p):
    # at the fixed point the leverage scores of W^{1/2-1/p} M equal w
    rng = np.random.default_rng(11)
    for _ in range(3):
        M = rng.standard_normal((50, 4))
        lw = lewis_weights(M, p, iters=60, exact=True)
        lev = svd_leverage(M * (lw.w ** (0.5 - 1 / p))[:, None])
        assert np.allclose(lev, lw.w, rtol=0.02)
        assert lw.total == pytest.approx(4.0, rel=0.02)


def test_lewis_approx_close_to_exact():
    rng = np.random.default_rng(12)
    M = rng.standard_normal((300, 4))
    exact = lewis_weights(M, 1.0, exact=True).w
    approx = lewis_weights(M, 1.0, seed=4).w
    ratio = approx / exact
    assert 0.3 <= ratio.min() and ratio.max() <= 3.0


def test_lewis_high_p_flagged():
    M = np.random.default_rng(13).standard_normal((40, 3))
    lw = lewis_weights(M, 3.0, exact=True)
    assert not lw.guaranteed
    assert np.all((lw.w > 0) & (lw.w <= 1))


def test_lewis_zero_rows_clamped():
    M = np.vstack([np.eye(3), np.zeros((2, 3))])
    lw = lewis_weights(M, 1.0, exact=True)
    assert np.all(lw.w[3:] == pytest.approx(1e-12))
    assert np.allclose(lw.w[:3], 1.0)


def test_lewis_duplicated_rows_split():
    for seed in range(3):
        assert duplicate_split_error(seed) <= 0.05


def test_lewis_rejects_bad_p():
    with pytest.raises(ValueError):
        lewis_weights(np.ones((3, 1)), 0.5)


def test_lewis_deterministic():
    M = np.random.default_rng(14).standard_normal((100, 3))
    assert np.array_equal(lewis_weights(M, 1.0, seed=5).w, lewis_weights(M, 1.0, seed=5).w)


# sampling ----------------------------------------------------------------


def test_uniform_sampling_frequencies():
    n, count = 10, 100_000
    T = build_sampling_matrix(np.ones(n), 1.0, count, seed=0)
    freq = np.bincount(T.source_rows, minlength=n)
    sigma = np.sqrt(count * (1 / n) * (1 - 1 / n))
    assert np.all(np.abs(freq - count / n) <= 3 * sigma)


def test_single_row_sampled_every_time():
    T = build_sampling_matrix(np.array([0.7]), 2.0, 8, seed=1)
    assert np.all(T.source_rows == 0)
    assert np.allclose(T.weights, (1 / 8) ** 0.5)


@pytest.mark.parametrize("p", [1.0, 2.0])
def test_sampling_unbiased_for_pth_power_sum(p):
    rng = np.random.default_rng(15)
    norms = rng.random(20) + 0.1
    w = rng.random(20) + 0.05
    est = []
    for s in range(400):
        T = build_sampling_matrix(w, p, 30, seed=s)
        est.append(np.sum(T.weights**p * norms[T.source_rows] ** p))
    assert np.mean(est) == pytest.approx(np.sum(norms**p), rel=0.03)


def test_merged_preserves_pth_power_sums():
    rng = np.random.default_rng(16)
    M = rng.standard_normal((15, 3))
    T = build_sampling_matrix(rng.random(15), 1.5, 60, seed=2)
    Tm = T.merged()
    assert len(np.unique(Tm.source_rows)) == Tm.count
    x = rng.standard_normal(3)
    lhs = np.sum(np.abs(T.apply(M) @ x) ** 1.5)
    rhs = np.sum(np.abs(Tm.apply(M) @ x) ** 1.5)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_l1_embedding_small_matrix():
    # 100 x 4 matrix, 600 samples, 50 directions: most trials within 1 +- 0.25
    rng = np.random.default_rng(17)
    ok = 0
    for trial in range(20):
        M = rng.standard_normal((100, 4))
        T = build_sampling_matrix(lewis_weights(M, 1.0, seed=trial), 1.0, 600, seed=trial)
        X = rng.standard_normal((4, 50))
        ratio = np.sum(np.abs(T.apply(M) @ X), axis=0) / np.sum(np.abs(M @ X), axis=0)
        ok += bool(np.all(np.abs(ratio - 1) <= 0.25))
    assert ok >= 18


def test_l1_embedding_width_eight():
    assert sum(l1_embedding_trial(s)["ok"] for s in range(10)) >= 9


def test_sampling_errors():
    with pytest.raises(ValueError):
        build_sampling_matrix(np.zeros(3), 1.0, 5)
    with pytest.raises(ValueError):
        build_sampling_matrix(np.ones(3), 1.0, 0)
    with pytest.raises(ValueError):
        build_sampling_matrix(np.array([1.0, -1.0]), 1.0, 5)


def test_sampling_deterministic():
    a = build_sampling_matrix(np.arange(1, 6.0), 1.0, 50, seed=3)
    b = build_sampling_matrix(np.arange(1, 6.0), 1.0, 50, seed=3)
    assert np.array_equal(a.source_rows, b.source_rows) and np.array_equal(a.weights, b.weights)
