"""Randomized sketching: CountSketch, sketched regression, leverage scores,
Lewis weights and importance row sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import _rng
from .config import Constants, resolve
from .linalg_core import PointMatrix, Subspace, as_point_matrix

__all__ = [
    "CountSketchSpec",
    "SamplingRescaling",
    "LewisWeights",
    "DegenerateSketchError",
    "countsketch_apply",
    "sketched_regression",
    "median_residuals",
    "leverage_scores_approx",
    "exact_leverage_scores",
    "lewis_weights",
    "build_sampling_matrix",
    "regression_width",
]


class DegenerateSketchError(ValueError):
    """The sketched matrix lost rank; callers may fall back to an exact factorization."""


@dataclass(frozen=True)
class CountSketchSpec:
    """Realized CountSketch: one ``+-1`` entry per input index.

    ``hash[i]`` is the bucket of input index ``i`` and ``sign[i]`` its sign.
    """

    target_rows: int
    seed: int
    hash: np.ndarray = field(repr=False)
    sign: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, target_rows: int, size: int, seed: int) -> "CountSketchSpec":
        if target_rows < 1:
            raise ValueError("target_rows must be >= 1")
        rng = _rng.stream(seed, "countsketch")
        h = rng.integers(0, target_rows, size=size)
        s = rng.choice(np.array([-1.0, 1.0]), size=size)
        h.setflags(write=False)
        s.setflags(write=False)
        return cls(int(target_rows), int(seed), h, s)

    @property
    def size(self) -> int:
        return int(self.hash.shape[0])

    def matrix(self) -> sp.csr_matrix:
        """The ``target_rows x size`` sketch as a sparse matrix."""
        return sp.csr_matrix(
            (self.sign, (self.hash, np.arange(self.size))), shape=(self.target_rows, self.size)
        )

    def compressed(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense ``size x b`` right-sketch restricted to the ``b`` occupied buckets.

        Empty buckets hold zero for every input, so dropping them leaves all
        norms unchanged while keeping memory at ``size x min(size, target_rows)``.
        """
        occupied, col = np.unique(self.hash, return_inverse=True)
        R = np.zeros((self.size, occupied.size))
        R[np.arange(self.size), col] = self.sign
        return R, occupied


def countsketch_apply(spec: CountSketchSpec, M) -> np.ndarray:
    """Left-apply the sketch: row ``j`` of the output is ``sum_{hash(i)=j} sign(i) M_i``."""
    if isinstance(M, PointMatrix):
        if M.n != spec.size:
            raise ValueError(f"sketch built for {spec.size} rows, matrix has {M.n}")
        if M.is_sparse:
            return np.asarray((spec.matrix() @ M.csr).toarray())
        M = M.to_dense()
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.shape[0] != spec.size:
        raise ValueError(f"sketch built for {spec.size} rows, matrix has {M.shape[0]}")
    out = np.zeros((spec.target_rows, M.shape[1]))
    np.add.at(out, spec.hash, spec.sign[:, None] * M)
    return out


def regression_width(ell: int, eps: float, constants: Constants | None = None) -> int:
    c = resolve(constants).regression_sketch_c
    return max(ell, math.ceil(c * max(ell, 1) ** 2 / eps**2))


def _sketched_solve(M, basis: np.ndarray, spec: CountSketchSpec):
    """Solve ``min_x ||M_i S - x V^T S||`` for every row; returns ``(X, residual norms)``."""
    ell = basis.shape[1]
    if spec.target_rows < ell:
        raise ValueError(
            f"sketch width {spec.target_rows} below subspace dimension {ell}: system underdetermined"
        )
    R, _ = spec.compressed()
    if isinstance(M, PointMatrix):
        MS = M.matmul(R)
    else:
        MS = np.asarray(M, dtype=float) @ R
    if ell == 0:
        return np.zeros((MS.shape[0], 0)), np.linalg.norm(MS, axis=1)
    VS = basis.T @ R
    X, *_ = np.linalg.lstsq(VS.T, MS.T, rcond=None)
    X = X.T
    resid = MS - X @ VS
    return X, np.linalg.norm(resid, axis=1)


def sketched_regression(M, basis, spec: CountSketchSpec) -> np.ndarray:
    """Per-row estimate of ``dist(M_i, span(basis))`` from one CountSketch.

    The sketch acts on the ``d`` coordinates (right multiplication), and the
    row's regression onto the sketched basis is solved in the sketched space.
    """
    U = basis.basis if isinstance(basis, Subspace) else np.asarray(basis, dtype=float)
    _, res = _sketched_solve(M, U, spec)
    return res


def sketched_coefficients(M, basis, spec: CountSketchSpec) -> np.ndarray:
    U = basis.basis if isinstance(basis, Subspace) else np.asarray(basis, dtype=float)
    X, _ = _sketched_solve(M, U, spec)
    return X


def default_repeats(n: int, constants: Constants | None = None) -> int:
    c = resolve(constants).median_repeats_c
    return max(1, math.ceil(c * math.log(max(n, 2))))


def median_residuals(
    A,
    S: Subspace,
    eps: float,
    repeats: int | None = None,
    seed: int = 0,
    *,
    width: int | None = None,
    threads: int | None = 1,
    constants: Constants | None = None,
) -> np.ndarray:
    """Median over ``repeats`` independent sketches of the per-row residual estimate."""
    if not (0.0 < eps <= 1.0):
        raise ValueError(f"epsilon must lie in (0, 1], got {eps!r}")
    A = as_point_matrix(A)
    if A.d != S.d:
        raise ValueError(f"dimension mismatch: points in R^{A.d}, subspace in R^{S.d}")
    repeats = default_repeats(A.n, constants) if repeats is None else int(repeats)
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    t = regression_width(S.ell, eps, constants) if width is None else int(width)

    def one(j: int) -> np.ndarray:
        spec = CountSketchSpec.create(t, A.d, _rng.derive_seed(seed, "median", j))
        return sketched_regression(A, S, spec)

    estimates = np.stack(_rng.parallel_map(one, range(repeats), threads))
    return np.median(estimates, axis=0)


def _leverage_from_orthonormal(Q: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", Q, Q)


def exact_leverage_scores(M: np.ndarray, rank_tol: float = 1e-10) -> np.ndarray:
    """Leverage scores from a rank-revealing (pivoted) thin QR."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return np.zeros(M.shape[0])
    Q, R, _ = scipy.linalg.qr(M, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(M.shape[0])
    rank = int(np.sum(diag > rank_tol * diag[0]))
    return _leverage_from_orthonormal(Q[:, :rank])


def leverage_scores_approx(M, seed: int = 0, *, constants: Constants | None = None) -> np.ndarray:
    """Constant-factor leverage scores: CountSketch, QR of the sketch, then a
    Gaussian JL projection of ``M R^{-1}``."""
    cfg = resolve(constants)
    M = np.asarray(M.to_dense() if isinstance(M, PointMatrix) else M, dtype=float)
    n, m = M.shape
    if m > n:
        raise ValueError(f"need m <= n, got {n} x {m}")
    t = max(m, math.ceil(cfg.leverage_sketch_c * m * m))
    spec = CountSketchSpec.create(t, n, _rng.derive_seed(seed, "countsketch"))
    SM = countsketch_apply(spec, M)
    R = np.linalg.qr(SM, mode="r")
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag.min() <= cfg.rank_tol * max(diag.max(), np.finfo(float).tiny):
        raise DegenerateSketchError("sketch of M is rank deficient")
    g = max(1, math.ceil(cfg.gaussian_cols_c * math.log(max(n, 2))))
    G = _rng.stream(seed, "gaussian").standard_normal((m, g)) / math.sqrt(g)
    RinvG = scipy.linalg.solve_triangular(R, G)
    Z = M @ RinvG
    return np.einsum("ij,ij->i", Z, Z)


@dataclass(frozen=True)
class LewisWeights:
    p: float
    w: np.ndarray
    converged: bool = True
    iterations: int = 0
    max_rel_change: float = 0.0
    guaranteed: bool = True

    @property
    def total(self) -> float:
        return float(np.sum(self.w))


def default_lewis_iters(n: int) -> int:
    return math.ceil(4 + math.log2(math.log2(max(n, 4))))


def lewis_weights(
    M,
    p: float,
    iters: int | None = None,
    seed: int = 0,
    exact: bool = False,
    *,
    constants: Constants | None = None,
) -> LewisWeights:
    """l_p Lewis weights by fixed-point iteration.

    Each step sets ``w_i <- (a_i^T (A^T W^{1-2/p} A)^+ a_i)^{p/2}``, which is
    computed as ``(w_i^{2/p-1} * tau_i)^{p/2}`` with ``tau`` the leverage
    scores of ``W^{1/2-1/p} A``.  The map is a contraction for ``p < 4``;
    for ``p > 2`` a damped best-effort iteration is used and the result is
    flagged as not guaranteed.
    """
    cfg = resolve(constants)
    if not (p >= 1.0 and math.isfinite(p)):
        raise ValueError(f"p must be a finite real >= 1, got {p!r}")
    M = np.asarray(M.to_dense() if isinstance(M, PointMatrix) else M, dtype=float)
    n = M.shape[0]
    guaranteed = p <= 2.0
    if iters is None:
        iters = default_lewis_iters(n)
        if not guaranteed:
            iters *= 4
    if iters < 1:
        raise ValueError("iters must be >= 1")
    lo = cfg.lewis_clamp_min

    # all-zero rows carry no weight; keep them out of the factorization
    live = np.linalg.norm(M, axis=1) > 0
    w = np.where(live, 1.0, lo)
    change = np.inf
    it = 0
    for it in range(1, iters + 1):
        scaled = M * (w ** (0.5 - 1.0 / p))[:, None]
        if exact:
            tau = exact_leverage_scores(scaled, cfg.rank_tol)
        else:
            try:
                sub = scaled[live]
                tau = np.zeros(n)
                if sub.shape[0] >= sub.shape[1]:
                    tau[live] = leverage_scores_approx(
                        sub, _rng.derive_seed(seed, "lewis", it), constants=cfg
                    )
                else:
                    tau[live] = exact_leverage_scores(sub, cfg.rank_tol)
            except DegenerateSketchError:
                tau = exact_leverage_scores(scaled, cfg.rank_tol)
        new = (np.maximum(w, lo) ** (2.0 / p - 1.0) * np.maximum(tau, 0.0)) ** (p / 2.0)
        if not guaranteed:
            damp = cfg.lewis_damping_high_p
            new = w ** damp * new ** (1.0 - damp)
        new = np.clip(new, lo, 1.0)
        new[~live] = lo
        change = float(np.max(np.abs(new - w) / np.maximum(w, lo)))
        w = new
    w.setflags(write=False)
    return LewisWeights(
        p=float(p),
        w=w,
        converged=change <= cfg.lewis_nonconvergence,
        iterations=it,
        max_rel_change=change,
        guaranteed=guaranteed,
    )


@dataclass(frozen=True)
class SamplingRescaling:
    """Row-sampling operator ``T``: source row indices and positive rescalings."""

    source_rows: np.ndarray
    weights: np.ndarray
    p: float

    def __post_init__(self):
        rows = np.asarray(self.source_rows, dtype=np.int64)
        wts = np.asarray(self.weights, dtype=float)
        if rows.shape != wts.shape:
            raise ValueError("source_rows and weights must have equal length")
        if np.any(wts <= 0):
            raise ValueError("rescaling weights must be positive")
        rows.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "source_rows", rows)
        object.__setattr__(self, "weights", wts)

    @property
    def count(self) -> int:
        return int(self.source_rows.shape[0])

    def apply(self, M: np.ndarray) -> np.ndarray:
        return self.weights[:, None] * np.asarray(M)[self.source_rows]

    def merged(self) -> "SamplingRescaling":
        """Collapse repeated indices: ``m`` copies of weight ``t`` become one row
        of weight ``m^{1/p} t``, which leaves every p-th-power sum unchanged."""
        uniq, inverse = np.unique(self.source_rows, return_inverse=True)
        acc = np.zeros(uniq.size)
        np.add.at(acc, inverse, self.weights**self.p)
        return SamplingRescaling(uniq, acc ** (1.0 / self.p), self.p)


def build_sampling_matrix(w, p: float, count: int, seed: int = 0) -> SamplingRescaling:
    """Sample ``count`` rows i.i.d. with probability ``w_i / sum(w)``.

    A sampled row is rescaled by ``(1 / (count q_i))^{1/p}`` so the weighted
    p-th-power sum is unbiased for the full sum.
    """
    weights = w.w if isinstance(w, LewisWeights) else np.asarray(w, dtype=float)
    if count < 1:
        raise ValueError("count must be >= 1")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("sampling weights must be finite and non-negative")
    total = float(np.sum(weights))
    if total <= 0:
        raise ValueError("all sampling weights are zero")
    q = weights / total
    rng = _rng.stream(seed, "sampling")
    idx = rng.choice(q.size, size=count, replace=True, p=q)
    scale = (1.0 / (count * q[idx])) ** (1.0 / p)
    return SamplingRescaling(idx, scale, float(p))
