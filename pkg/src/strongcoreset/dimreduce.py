"""Dimensionality reduction to ``B = [A P_S, v]`` in factored form.

Two constructions are provided.  :func:`dim_reduce_exact` grows ``S`` by
k-dimensional augmentations while each one still lowers the l_p cost by a
fixed fraction of the rank-k optimum.  :func:`dim_reduce_sampled` draws a
random multiple ``i* k`` of ``k`` and fits one approximately optimal
``i* k``-dimensional subspace, estimating the appended distances by sketched
regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .config import Constants, check_params, reduction_exponent, resolve
from .linalg_core import (
    PointMatrix,
    Subspace,
    as_point_matrix,
    complement,
    cost_p,
    residual_sq_norms,
    span_union,
)
from .sketching import CountSketchSpec, median_residuals, regression_width, sketched_coefficients

__all__ = [
    "AugmentedMatrix",
    "ReductionReport",
    "irls_subspace",
    "approx_subspace",
    "dim_reduce_exact",
    "dim_reduce_sampled",
    "approx_projection_rows",
    "augmented_cost",
    "pth_power_accuracy",
    "realized_cost",
]


@dataclass(frozen=True)
class AugmentedMatrix:
    """Rows ``(coeffs_i U^T, tail_i)`` of the n x (d+1) matrix ``B``."""

    coeffs: np.ndarray
    basis: Subspace
    tail: np.ndarray
    exact_tail: bool

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        tail = np.array(self.tail, dtype=float).ravel()
        if coeffs.ndim != 2 or coeffs.shape[1] != self.basis.ell:
            raise ValueError("coeffs must be n x ell with ell = basis dimension")
        if tail.shape[0] != coeffs.shape[0]:
            raise ValueError("tail length must equal the number of rows")
        if np.any(tail < 0):
            raise ValueError("tail entries must be non-negative")
        coeffs.setflags(write=False)
        tail.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "tail", tail)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def ell(self) -> int:
        return self.basis.ell

    def rows(self, idx=None) -> np.ndarray:
        """Realized rows of ``B`` (all rows when ``idx`` is None)."""
        c = self.coeffs if idx is None else self.coeffs[np.asarray(idx)]
        t = self.tail if idx is None else self.tail[np.asarray(idx)]
        return np.hstack([c @ self.basis.basis.T, t[:, None]])

    def factored(self) -> np.ndarray:
        """``[A U, v]``: same row norms and row space geometry as ``B``."""
        return np.hstack([self.coeffs, self.tail[:, None]])


def augmented_cost(coeffs, basis: np.ndarray, tail, V: Subspace, p: float, weights=None) -> float:
    """``sum_i w_i^p (||b_i - b_i P_V||^2 + tail_i^2)^{p/2}`` for ``b_i = coeffs_i basis^T``.

    The tail coordinate is never projected.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    G = basis.T @ V.basis
    inner = coeffs @ G
    r2 = np.einsum("ij,ij->i", coeffs, coeffs) - np.einsum("ij,ij->i", inner, inner)
    r2 = np.maximum(r2, 0.0) + np.asarray(tail, dtype=float) ** 2
    terms = r2 ** (p / 2.0)
    if weights is not None:
        terms = terms * np.asarray(weights, dtype=float) ** p
    return float(np.sum(terms))


@dataclass(frozen=True)
class ReductionReport:
    variant: str
    iterations: int
    cost_trace: tuple[float, ...]
    opt_estimate: float
    threshold: float
    seed: int
    i_star: int | None = None
    tau: float | None = None
    hit_cap: bool = False
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "iterations": self.iterations,
            "cost_trace": list(self.cost_trace),
            "opt_estimate": self.opt_estimate,
            "threshold": self.threshold,
            "seed": self.seed,
            "i_star": self.i_star,
            "tau": self.tau,
            "hit_cap": self.hit_cap,
        }


def _weighted_cost(X, U, p, row_weights, offsets2):
    proj = X @ U
    r2 = np.maximum(np.einsum("ij,ij->i", X, X) - np.einsum("ij,ij->i", proj, proj), 0.0)
    if offsets2 is not None:
        r2 = r2 + offsets2
    return float(np.sum(row_weights * r2 ** (p / 2.0))), r2


def _top_right_singular(X: np.ndarray, m: int) -> np.ndarray:
    _, _, Vt = np.linalg.svd(X, full_matrices=False)
    V = Vt[:m].T
    if V.shape[1] < m:
        # X has fewer rows than m; complete with arbitrary orthonormal directions
        V = np.linalg.qr(np.hstack([V, np.eye(X.shape[1])]))[0][:, :m]
    return V


def irls_subspace(
    X,
    m: int,
    p: float,
    *,
    row_weights=None,
    offsets=None,
    seed: int = 0,
    restarts: int | None = None,
    init: np.ndarray | None = None,
    constants: Constants | None = None,
) -> tuple[Subspace, float]:
    """Local optimum of ``sum_i c_i (dist(x_i, U)^2 + t_i^2)^{p/2}`` over m-dim ``U``.

    Iteratively reweighted SVD: rows are reweighted by ``c_i * r_i^{p-2}``
    (floored) and ``U`` is replaced by the top right singular space.  For
    ``p <= 2`` each step is a majorize-minimize step and cannot increase the
    objective.  Runs from the SVD start, ``init`` if given, and ``restarts``
    random starts; returns the best.
    """
    cfg = resolve(constants)
    X = np.asarray(X.to_dense() if isinstance(X, PointMatrix) else X, dtype=float)
    n, D = X.shape
    if not (1 <= m <= D):
        raise ValueError(f"need 1 <= m <= {D}, got {m}")
    c = np.ones(n) if row_weights is None else np.asarray(row_weights, dtype=float)
    off2 = None if offsets is None else np.asarray(offsets, dtype=float) ** 2
    if m == D:
        U = np.eye(D)
        return Subspace(U), _weighted_cost(X, U, p, c, off2)[0]
    scale = float(np.sqrt(np.max(np.einsum("ij,ij->i", X, X)))) if n else 0.0
    if scale == 0.0:
        U = np.eye(D)[:, :m]
        return Subspace(U), _weighted_cost(X, U, p, c, off2)[0]
    floor2 = (cfg.irls_floor * scale) ** 2
    restarts = cfg.irls_restarts if restarts is None else restarts

    starts = [_top_right_singular(np.sqrt(c)[:, None] * X, m)]
    if init is not None:
        starts.append(np.asarray(init, dtype=float)[:, :m])
    rng = _rng.stream(seed, "irls")
    for _ in range(restarts):
        starts.append(np.linalg.qr(rng.standard_normal((D, m)))[0])

    best_U, best_cost = None, math.inf
    for U in starts:
        cost, r2 = _weighted_cost(X, U, p, c, off2)
        # p = 2 without offsets is solved exactly by the SVD start
        iters = 0 if (p == 2.0 and off2 is None) else cfg.irls_max_iter
        for _ in range(iters):
            wts = c * np.maximum(r2, floor2) ** ((p - 2.0) / 2.0)
            U_new = _top_right_singular(np.sqrt(wts)[:, None] * X, m)
            new_cost, new_r2 = _weighted_cost(X, U_new, p, c, off2)
            if new_cost > cost and p <= 2.0:
                break
            improved = cost - new_cost
            U, cost, r2 = U_new, new_cost, new_r2
            if improved <= cfg.irls_tol * max(cost, np.finfo(float).tiny):
                break
        if cost < best_cost:
            best_U, best_cost = U, cost
    Q, _ = np.linalg.qr(best_U)
    return Subspace(Q), float(best_cost)


def approx_subspace(
    A,
    m: int,
    eps: float,
    p: float,
    mode: str = "auto",
    seed: int = 0,
    *,
    constants: Constants | None = None,
) -> Subspace:
    """m-dimensional subspace approximately minimizing ``cost_p``.

    Modes: ``exact2`` (top-m right singular space, p = 2 only),
    ``irls`` (iteratively reweighted SVD, any p), ``bruteforce`` (certified
    grid search, d <= 4 and m <= 2) and ``auto`` (the best applicable).
    """
    A = as_point_matrix(A)
    if not (1 <= m <= A.d):
        raise ValueError(f"need 1 <= m <= d = {A.d}, got {m}")
    if mode == "auto":
        if p == 2.0:
            mode = "exact2"
        elif A.d <= 4 and m <= 2:
            mode = "bruteforce"
        else:
            mode = "irls"
    if m == A.d:
        return Subspace.full(A.d)
    if mode == "exact2":
        if p != 2.0:
            raise ValueError("exact2 mode requires p = 2")
        return Subspace(_top_right_singular(A.to_dense(), m))
    if mode == "irls":
        return irls_subspace(A, m, p, seed=seed, constants=constants)[0]
    if mode == "bruteforce":
        from .oracle_harness.bruteforce import MAX_D, MAX_M, brute_force_subspace

        if A.d > MAX_D or m > MAX_M:
            raise ValueError(f"bruteforce mode limited to d <= {MAX_D}, m <= {MAX_M}")
        return brute_force_subspace(A, m, p, eps).subspace
    raise ValueError(f"unknown mode {mode!r}")


def _best_augmentation(R: np.ndarray, S: Subspace, k: int, p: float, eps: float, seed: int, cfg):
    """Search a subspace W orthogonal to S minimizing the cost of the residual ``R``."""
    Qc = complement(S)
    r = Qc.ell
    m = min(k, r)
    Rc = R @ Qc.basis
    if m == r:
        return Qc.basis
    if p == 2.0:
        W = _top_right_singular(Rc, m)
    elif r <= 4 and m <= 2:
        from .oracle_harness.bruteforce import brute_force_subspace

        # a bounded grid seeds the search; IRLS from its answer refines it
        grid = brute_force_subspace(Rc, m, p, eps, max_cells=cfg.augment_grid_cells)
        W, c = irls_subspace(Rc, m, p, seed=seed, init=grid.subspace.basis, constants=cfg)
        W = (grid.subspace if grid.cost < c else W).basis
    else:
        W = irls_subspace(Rc, m, p, seed=seed, constants=cfg)[0].basis
    return Qc.basis @ W


def _exact_tail(A: PointMatrix, S: Subspace) -> np.ndarray:
    return np.sqrt(residual_sq_norms(A, S))


def dim_reduce_exact(
    A,
    k: int,
    eps: float,
    p: float,
    seed: int = 0,
    *,
    constants: Constants | None = None,
) -> tuple[AugmentedMatrix, ReductionReport]:
    """Grow a rank-k starting subspace by k-dimensional augmentations.

    An augmentation is kept while it lowers ``cost_p`` by at least
    ``eps^{max(2/p,1)} * opt / 80``, with ``opt`` estimated by the cost of the
    starting subspace.  The appended column holds exact residual distances.
    """
    check_params(k=k, eps=eps, p=p)
    cfg = resolve(constants)
    A = as_point_matrix(A)
    expo = reduction_exponent(p)
    cap = math.ceil(cfg.drop_divisor / eps**expo)

    S = approx_subspace(A, min(k, A.d), eps, p, "auto", _rng.derive_seed(seed, "irls", 0), constants=cfg)
    cost = cost_p(A, S, p)
    opt = cost
    threshold = eps**expo * opt / cfg.drop_divisor
    trace = [cost]
    iterations = 0
    Ad = A.to_dense()
    # costs at roundoff level relative to the data count as zero
    negligible = cfg.rel_err_floor * float(np.sum(A.row_norms() ** p))
    while S.ell < A.d and cost > negligible and iterations < cap:
        R = Ad - (Ad @ S.basis) @ S.basis.T
        W = _best_augmentation(R, S, k, p, eps, _rng.derive_seed(seed, "irls", iterations + 1), cfg)
        S_new = span_union(S, W)
        if S_new.ell == S.ell:
            break
        new_cost = cost_p(A, S_new, p)
        drop = cost - new_cost
        if drop <= 0 or drop < threshold:
            break
        S, cost = S_new, new_cost
        trace.append(cost)
        iterations += 1
    aug = AugmentedMatrix(A.matmul(S.basis), S, _exact_tail(A, S), exact_tail=True)
    report = ReductionReport(
        variant="exact",
        iterations=iterations,
        cost_trace=tuple(trace),
        opt_estimate=opt,
        threshold=threshold,
        seed=int(seed),
        hit_cap=iterations >= cap,
    )
    return aug, report


def pth_power_accuracy(eps: float, p: float) -> float:
    """Reduction accuracy ``eps^(p+3) / (3 (84 p)^(2p))`` that makes ``B`` preserve
    p-th-power costs (rather than their p-th roots) to ``1 +- eps``."""
    check_params(eps=eps, p=p)
    return eps ** (p + 3) / (3.0 * (84.0 * p) ** (2.0 * p))


def sampled_tau(eps: float, p: float, constants: Constants | None = None) -> float:
    return eps ** reduction_exponent(p) / resolve(constants).tau_divisor


def dim_reduce_sampled(
    A,
    k: int,
    eps: float,
    p: float,
    seed: int = 0,
    *,
    threads: int | None = 1,
    constants: Constants | None = None,
) -> tuple[AugmentedMatrix, ReductionReport]:
    """Fit one approximately optimal ``i* k``-dimensional subspace for a random ``i*``.

    The appended column is a median-of-sketches ``(1 +- eps)`` estimate of
    each row's residual distance.
    """
    check_params(k=k, eps=eps, p=p)
    cfg = resolve(constants)
    A = as_point_matrix(A)
    tau = sampled_tau(eps, p, cfg)
    top = math.ceil(10.0 / tau)
    i_star = int(_rng.stream(seed, "istar").integers(1, top + 1))
    m = min(i_star * k, A.d)
    S = approx_subspace(A, m, min(tau, 1.0), p, "auto", _rng.derive_seed(seed, "irls"), constants=cfg)
    rank_k = approx_subspace(A, min(k, A.d), min(tau, 1.0), p, "auto", _rng.derive_seed(seed, "irls", 1), constants=cfg)
    opt = cost_p(A, rank_k, p)
    tail = median_residuals(
        A, S, eps, seed=_rng.derive_seed(seed, "median"), threads=threads, constants=cfg
    )
    aug = AugmentedMatrix(A.matmul(S.basis), S, tail, exact_tail=False)
    report = ReductionReport(
        variant="fast",
        iterations=0,
        cost_trace=(cost_p(A, S, p),),
        opt_estimate=opt,
        threshold=tau * opt,
        seed=int(seed),
        i_star=i_star,
        tau=tau,
    )
    return aug, report


def approx_projection_rows(
    A,
    S: Subspace,
    eps: float,
    seed: int = 0,
    *,
    threads: int | None = 1,
    constants: Constants | None = None,
) -> AugmentedMatrix:
    """Approximate projections ``X_i V^T`` from one sketched regression per row,
    with median-of-sketches residual estimates as the tail."""
    check_params(eps=eps)
    A = as_point_matrix(A)
    if A.d != S.d:
        raise ValueError(f"dimension mismatch: points in R^{A.d}, subspace in R^{S.d}")
    width = regression_width(S.ell, eps, constants)
    spec = CountSketchSpec.create(width, A.d, _rng.derive_seed(seed, "countsketch"))
    X = sketched_coefficients(A, S, spec)
    tail = median_residuals(
        A, S, eps, seed=_rng.derive_seed(seed, "median"), threads=threads, constants=constants
    )
    return AugmentedMatrix(X, S, tail, exact_tail=False)


def realized_cost(aug: AugmentedMatrix, V: Subspace, p: float) -> float:
    """p-th-power cost of ``B - B I P_V I^T``."""
    return augmented_cost(aug.coeffs, aug.basis.basis, aug.tail, V, p)
