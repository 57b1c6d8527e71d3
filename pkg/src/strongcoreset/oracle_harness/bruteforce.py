"""Certified brute-force l_p subspace approximation for tiny ambient dimension.

Every m-dimensional subspace of R^d is the column space of some ``Y`` whose
rows in a pivot set ``J`` (|J| = m) form the identity and whose remaining
rows ``X`` satisfy ``|X_ij| <= 1`` (take ``J`` as a maximal-volume row subset
of any orthonormal basis).  The search space is therefore a finite union of
boxes ``[-1, 1]^{(d-m) m}``.  Since ``Y^T Y = I + X^T X`` has smallest singular
value >= 1, the projector moves by at most ``||dX||_F`` in spectral norm, so

    |cost_p(X1) - cost_p(X2)| <= p * sum_i ||a_i||^p * ||X1 - X2||_F.

Branch-and-bound on those boxes with this Lipschitz bound certifies a
``(1 + eps)`` optimum.  Evaluation here is deliberately independent of the
library's projection code.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from ..linalg_core import PointMatrix, Subspace

MAX_D = 4
MAX_M = 2


@dataclass(frozen=True)
class BruteForceResult:
    subspace: Subspace
    cost: float
    lower_bound: float
    certified: bool
    cells_evaluated: int
    lipschitz: float
    meta: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        if self.lower_bound <= 0:
            return math.inf if self.cost > 0 else 1.0
        return self.cost / self.lower_bound


def _frames(charts_X: np.ndarray, pivots: tuple[int, ...], d: int) -> np.ndarray:
    """Stack of ``Y`` matrices (batch x d x m) for chart parameters ``X``."""
    batch, r, m = charts_X.shape
    Y = np.zeros((batch, d, m))
    rest = [i for i in range(d) if i not in pivots]
    for j, piv in enumerate(pivots):
        Y[:, piv, j] = 1.0
    Y[:, rest, :] = charts_X
    return Y


def _batch_cost(A: np.ndarray, sq: np.ndarray, Y: np.ndarray, p: float) -> np.ndarray:
    Q, _ = np.linalg.qr(Y)
    proj = np.matmul(A[None, :, :], Q)
    res = np.maximum(sq[None, :] - np.sum(proj * proj, axis=2), 0.0)
    return np.sum(res ** (p / 2.0), axis=1)


def brute_force_subspace(
    A,
    m: int,
    p: float,
    eps: float,
    *,
    max_cells: int = 2_000_000,
    max_levels: int = 40,
    abs_tol: float | None = None,
) -> BruteForceResult:
    """Certified ``(1 + eps)``-optimal m-dimensional subspace for d <= 4, m <= 2."""
    A = np.asarray(A.to_dense() if isinstance(A, PointMatrix) else A, dtype=float)
    n, d = A.shape
    if d > MAX_D or m > MAX_M:
        raise ValueError(f"brute force limited to d <= {MAX_D}, m <= {MAX_M}; got d={d}, m={m}")
    if m < 0 or m > d:
        raise ValueError(f"need 0 <= m <= d, got m={m}, d={d}")
    if not (0 < eps <= 1):
        raise ValueError("epsilon must lie in (0, 1]")
    sq = np.einsum("ij,ij->i", A, A)
    if m == d:
        return BruteForceResult(Subspace(np.eye(d)), 0.0, 0.0, True, 0, 0.0)
    if m == 0:
        c = float(np.sum(sq ** (p / 2)))
        return BruteForceResult(Subspace(np.zeros((d, 0))), c, c, True, 0, 0.0)

    L = p * float(np.sum(sq ** (p / 2)))
    if abs_tol is None:
        abs_tol = 1e-12 * max(L, 1e-300)
    r = d - m
    D = r * m
    charts = list(itertools.combinations(range(d), m))

    best = math.inf
    best_x = None
    best_chart = None
    lower = math.inf
    evaluated = 0
    # centers (batch x D), half-width per cell (same for a whole level)
    init_split = 4
    ticks = -1 + (2 * np.arange(init_split) + 1) / init_split
    grid = np.array(list(itertools.product(ticks, repeat=D)))
    half = 1.0 / init_split
    live = [(ci, grid.copy()) for ci in range(len(charts))]
    certified = True

    for level in range(max_levels):
        h = half * math.sqrt(D)
        next_live = []
        for ci, centers in live:
            pivots = charts[ci]
            vals = np.empty(centers.shape[0])
            for s in range(0, centers.shape[0], 20000):
                chunk = centers[s : s + 20000]
                vals[s : s + chunk.shape[0]] = _batch_cost(
                    A, sq, _frames(chunk.reshape(-1, r, m), pivots, d), p
                )
            evaluated += centers.shape[0]
            j = int(np.argmin(vals))
            if vals[j] < best:
                best, best_x, best_chart = float(vals[j]), centers[j].copy(), ci
            next_live.append((ci, centers, vals))
        refined = []
        for ci, centers, vals in next_live:
            lb = vals - L * h
            done = (lb >= best / (1.0 + eps)) | (L * h <= abs_tol)
            if np.any(done):
                lower = min(lower, float(lb[done].min()))
            if not np.all(done):
                refined.append((ci, centers[~done], lb[~done]))
        if not refined:
            break
        total = sum(c.shape[0] for _, c, _ in refined) * 2**D
        if total > max_cells or level == max_levels - 1:
            # budget exhausted: unrefined cells still bound the optimum from below
            certified = False
            lower = min(lower, min(float(lb.min()) for _, _, lb in refined))
            break
        half /= 2.0
        offsets = np.array(list(itertools.product((-half, half), repeat=D)))
        live = [(ci, (c[:, None, :] + offsets[None, :, :]).reshape(-1, D)) for ci, c, _ in refined]

    # local polish in the best chart; it can only lower the upper bound
    pivots = charts[best_chart]

    def f(x):
        return float(_batch_cost(A, sq, _frames(x.reshape(1, r, m), pivots, d), p)[0])

    res = scipy.optimize.minimize(
        f, best_x, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000}
    )
    x_final = res.x if res.fun < best else best_x
    cost = min(best, float(res.fun))
    Y = _frames(x_final.reshape(1, r, m), pivots, d)[0]
    Q, _ = np.linalg.qr(Y)
    lower = max(0.0, min(lower, cost))
    if certified:
        certified = cost <= (1.0 + eps) * lower or cost <= abs_tol
    return BruteForceResult(
        subspace=Subspace(Q),
        cost=cost,
        lower_bound=lower,
        certified=bool(certified),
        cells_evaluated=evaluated,
        lipschitz=L,
        meta={"charts": len(charts), "params": D, "p": p, "eps": eps},
    )
