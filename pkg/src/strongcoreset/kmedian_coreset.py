"""Weighted k-median coresets built in the reduced space.

The input is reduced with the sampled dimensionality reduction, rows are
replaced by approximate projections, and sensitivity sampling runs on the
reduced rows (coordinates in an orthonormal basis of the reduction
subspace, padded by ``k`` zero coordinates, with the residual distance as a
final coordinate).  Sampled rows are mapped back to R^d plus the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .config import Constants, check_params, kmedian_size_bound, resolve
from .dimreduce import approx_projection_rows, dim_reduce_sampled
from .linalg_core import CenterSet, as_point_matrix, nearest_centers

__all__ = [
    "WeightedCoreset",
    "SensitivityProfile",
    "bicriteria_kmedian",
    "local_search_kmedian",
    "sensitivities",
    "build_kmedian_coreset",
    "eval_kmedian_cost",
    "weighted_kmedian_cost",
    "size_bound",
]


@dataclass(frozen=True)
class WeightedCoreset:
    """``s`` points in R^(d+1) (last coordinate is the tail) with weights."""

    points: np.ndarray
    weights: np.ndarray
    k: int
    epsilon: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        w = np.array(self.weights, dtype=float).ravel()
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("coreset must contain at least one row")
        if w.shape[0] != pts.shape[0]:
            raise ValueError("one weight per coreset row required")
        if np.any(w < 0):
            raise ValueError("coreset weights must be non-negative")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def s(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1] - 1

    @property
    def projected(self) -> np.ndarray:
        return self.points[:, :-1]

    @property
    def tail(self) -> np.ndarray:
        return self.points[:, -1]


@dataclass(frozen=True)
class SensitivityProfile:
    bicriteria_centers: CenterSet
    assignments: np.ndarray
    sensitivities: np.ndarray
    total: float


def weighted_kmedian_cost(X, centers, weights=None, tails=None) -> float:
    """``sum_i w_i sqrt(dist(x_i, C)^2 + t_i^2)``."""
    _, dist = nearest_centers(X, centers)
    if tails is not None:
        dist = np.sqrt(dist**2 + np.asarray(tails, dtype=float) ** 2)
    if weights is not None:
        dist = dist * np.asarray(weights, dtype=float)
    return float(np.sum(dist))


def _weiszfeld(X, w, t2, start, tol, max_iter):
    """Weighted geometric median of rows of ``X`` with per-row offsets ``t2``."""
    c = start.copy()
    for _ in range(max_iter):
        D = np.sqrt(np.einsum("ij,ij->i", X - c, X - c) + t2)
        hit = D < 1e-12
        if np.any(hit):
            # sitting on a data point with zero offset; that point is a valid
            # median candidate only if the pull of the others is weak enough
            others = ~hit
            if not np.any(others):
                return c
            g = np.sum((w[others] / D[others])[:, None] * (X[others] - c), axis=0)
            if np.linalg.norm(g) <= np.sum(w[hit]):
                return c
            D = np.where(hit, 1e-12, D)
        coef = w / D
        new = coef @ X / coef.sum()
        if np.linalg.norm(new - c) <= tol * max(1.0, np.linalg.norm(c)):
            return new
        c = new
    return c


def _d_sampling_seed(X, w, t2, k, rng):
    """Seeding with probability proportional to (weighted) current distance."""
    n = X.shape[0]
    p0 = w / w.sum()
    centers = [X[rng.choice(n, p=p0)]]
    D = np.sqrt(np.einsum("ij,ij->i", X - centers[0], X - centers[0]) + t2)
    for _ in range(1, k):
        mass = w * D
        total = mass.sum()
        if total <= 0:
            centers.append(X[rng.choice(n, p=p0)])
        else:
            centers.append(X[rng.choice(n, p=mass / total)])
        Dn = np.sqrt(np.einsum("ij,ij->i", X - centers[-1], X - centers[-1]) + t2)
        D = np.minimum(D, Dn)
    return np.array(centers)


def bicriteria_kmedian(
    points,
    k: int,
    seed: int = 0,
    *,
    weights=None,
    tails=None,
    constants: Constants | None = None,
) -> CenterSet:
    """Distance-proportional seeding followed by alternating assignment and
    Weiszfeld geometric-median refinement."""
    cfg = resolve(constants)
    X = np.asarray(points, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("need at least one point")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = X.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    t2 = np.zeros(n) if tails is None else np.asarray(tails, dtype=float) ** 2
    rng = _rng.stream(seed, "seeding")
    C = _d_sampling_seed(X, w, t2, k, rng)
    cost = weighted_kmedian_cost(X, C, w, np.sqrt(t2))
    for _ in range(cfg.bicriteria_rounds):
        assign, _ = nearest_centers(X, C)
        new = C.copy()
        for j in range(k):
            members = assign == j
            if np.any(members) and w[members].sum() > 0:
                new[j] = _weiszfeld(
                    X[members], w[members], t2[members], C[j], cfg.weiszfeld_tol, cfg.weiszfeld_max_iter
                )
        new_cost = weighted_kmedian_cost(X, new, w, np.sqrt(t2))
        if new_cost >= cost * (1 - 1e-12):
            if new_cost < cost:
                C, cost = new, new_cost
            break
        C, cost = new, new_cost
    return CenterSet(C)


def _swap_pass(X, w, tails, C, rng, candidates):
    """Try replacing each center by distance-sampled data points; keep the best swap."""
    cost = weighted_kmedian_cost(X, C, w, tails)
    _, dist = nearest_centers(X, C)
    mass = w * dist
    if mass.sum() <= 0:
        return C, cost, False
    picks = rng.choice(X.shape[0], size=min(candidates, X.shape[0]), replace=False, p=mass / mass.sum())
    best_C, best_cost = C, cost
    for j in range(C.shape[0]):
        for i in picks:
            trial = C.copy()
            trial[j] = X[i]
            c = weighted_kmedian_cost(X, trial, w, tails)
            if c < best_cost * (1 - 1e-9):
                best_C, best_cost = trial, c
    return best_C, best_cost, best_cost < cost


def local_search_kmedian(
    points,
    k: int,
    seed: int = 0,
    *,
    weights=None,
    tails=None,
    restarts: int = 5,
    swap_passes: int = 5,
    candidates: int = 10,
    constants: Constants | None = None,
) -> CenterSet:
    """Seeded bicriteria runs improved by single-swap local search.

    Each restart alternates a swap pass with Weiszfeld refinement until no
    swap helps; the best restart under the same objective is returned.
    """
    cfg = resolve(constants)
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    t2 = np.zeros(n) if tails is None else np.asarray(tails, dtype=float) ** 2
    best, best_cost = None, math.inf
    for r in range(restarts):
        rseed = _rng.derive_seed(seed, "adaptive", r)
        C = bicriteria_kmedian(X, k, rseed, weights=w, tails=tails, constants=cfg).centers.copy()
        rng = _rng.stream(rseed, "adaptive")
        for _ in range(swap_passes):
            C, _, improved = _swap_pass(X, w, tails, C, rng, candidates)
            if not improved:
                break
            assign, _ = nearest_centers(X, C)
            for j in range(k):
                members = assign == j
                if np.any(members):
                    C[j] = _weiszfeld(
                        X[members], w[members], t2[members], C[j], cfg.weiszfeld_tol, cfg.weiszfeld_max_iter
                    )
        c = weighted_kmedian_cost(X, C, w, tails)
        if c < best_cost:
            best, best_cost = C, c
    return CenterSet(best)


def sensitivities(points, centers: CenterSet, *, weights=None, tails=None) -> SensitivityProfile:
    """Sensitivity upper bounds ``dist(p_i, C)/cost + 1/|cluster(i)|``.

    The total is ``1 + (number of non-empty clusters) <= k + 1``.  Weighted
    inputs use weighted cluster masses.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    assign, dist = nearest_centers(X, centers.centers)
    if tails is not None:
        dist = np.sqrt(dist**2 + np.asarray(tails, dtype=float) ** 2)
    mass = np.bincount(assign, weights=w, minlength=centers.k)
    total_cost = float(np.sum(w * dist))
    s = 1.0 / mass[assign]
    if total_cost > 0:
        s = s + dist / total_cost
    return SensitivityProfile(centers, assign, s, float(np.sum(w * s)))


def eval_kmedian_cost(C: WeightedCoreset, centers) -> float:
    """``sum_i w_i sqrt(||b_i - c*||^2 + v_i^2)``, ``c*`` nearest to ``b_i``."""
    if not isinstance(centers, CenterSet):
        centers = CenterSet(centers)
    if centers.d != C.d:
        raise ValueError(f"dimension mismatch: coreset in R^{C.d}, centers in R^{centers.d}")
    return weighted_kmedian_cost(C.projected, centers.centers, C.weights, C.tail)


def size_bound(k: int, eps: float, constants: Constants | None = None) -> int:
    return kmedian_size_bound(k, eps, resolve(constants).kmedian_size_c)


def build_kmedian_coreset(
    A,
    k: int,
    eps: float,
    seed: int = 0,
    *,
    threads: int | None = 1,
    constants: Constants | None = None,
) -> WeightedCoreset:
    check_params(k=k, eps=eps)
    cfg = resolve(constants)
    A = as_point_matrix(A)
    n = A.n

    aug, report = dim_reduce_sampled(
        A, k, eps / 10, 1.0, _rng.derive_seed(seed, "irls"), threads=threads, constants=cfg
    )
    S = aug.basis
    tilde = approx_projection_rows(
        A, S, eps / 10, _rng.derive_seed(seed, "median"), threads=threads, constants=cfg
    )
    # coordinates in the reduced basis, k zero pad dimensions, tail last
    X = np.hstack([tilde.coeffs, np.zeros((n, k)), tilde.tail[:, None]])

    centers = bicriteria_kmedian(X, k, _rng.derive_seed(seed, "seeding"), constants=cfg)
    prof = sensitivities(X, centers)
    count = size_bound(k, eps, cfg)
    q = prof.sensitivities / prof.total
    rng = _rng.stream(seed, "sampling")
    idx = rng.choice(n, size=count, replace=True, p=q)
    uniq, inverse = np.unique(idx, return_inverse=True)
    w = np.zeros(uniq.size)
    np.add.at(w, inverse, 1.0 / (count * q[idx]))

    pts = np.hstack([tilde.coeffs[uniq] @ S.basis.T, tilde.tail[uniq][:, None]])
    meta = {
        "seed": int(seed),
        "sampled": int(count),
        "reduction": report.to_dict(),
        "ell": int(S.ell),
        "sensitivity_total": prof.total,
        "sensitivity_bound": cfg.sensitivity_total_c * k,
        "source_rows": uniq.tolist(),
        "weight_mass": float(w.sum()),
    }
    return WeightedCoreset(pts, w, k, eps, meta)
