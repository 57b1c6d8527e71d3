"""Strong coresets for l_p subspace approximation.

Pipeline: reduce ``A`` to ``B = [A P_S, v]``, compute l_p Lewis weights of the
factored rows ``[A U, v]``, importance-sample rows of ``B`` with those weights
and materialize only the sampled rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .config import Constants, check_params, resolve, subspace_size_bound
from .dimreduce import AugmentedMatrix, dim_reduce_exact, dim_reduce_sampled
from .linalg_core import PointMatrix, Subspace, as_point_matrix, cost_p, orthonormalize
from .sketching import build_sampling_matrix, lewis_weights

__all__ = [
    "SubspaceCoreset",
    "build_subspace_coreset",
    "eval_subspace_cost",
    "coreset_from_augmented",
    "random_rank_k_subspaces",
    "size_bound",
]


@dataclass(frozen=True)
class SubspaceCoreset:
    """``s`` rows of ``T B`` in R^(d+1) with their rescaling factors.

    ``points[:, :d]`` is the projected part and ``points[:, d]`` the tail.
    Rescalings are stored separately; a row enters costs as
    ``row_weights[i]^p * dist^p``.
    """

    points: np.ndarray
    row_weights: np.ndarray
    p: float
    k: int
    eps: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        wts = np.array(self.row_weights, dtype=float).ravel()
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("coreset must contain at least one row")
        if wts.shape[0] != pts.shape[0]:
            raise ValueError("one weight per coreset row required")
        if np.any(wts <= 0):
            raise ValueError("coreset weights must be positive")
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "row_weights", wts)

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


def eval_subspace_cost(C: SubspaceCoreset, V, *, power: bool = False) -> float:
    """``(sum_i w_i^p (||b_i - b_i P_V||^2 + tail_i^2)^{p/2})^{1/p}``.

    ``power=True`` returns the sum itself (the p-th power).  ``V`` is a
    ``Subspace`` or a d x m matrix whose columns span the query; it may have
    dimension below ``k``.
    """
    if not isinstance(V, Subspace):
        V = orthonormalize(np.atleast_2d(np.asarray(V, dtype=float)))
    if V.d != C.d:
        raise ValueError(f"dimension mismatch: coreset in R^{C.d}, subspace in R^{V.d}")
    b = C.projected
    inner = b @ V.basis
    r2 = np.maximum(np.einsum("ij,ij->i", b, b) - np.einsum("ij,ij->i", inner, inner), 0.0)
    total = float(np.sum(C.row_weights**C.p * (r2 + C.tail**2) ** (C.p / 2.0)))
    return total if power else total ** (1.0 / C.p)


def random_rank_k_subspaces(d: int, k: int, count: int, seed: int) -> list[Subspace]:
    rng = _rng.stream(seed, "queries")
    return [orthonormalize(rng.standard_normal((d, k))) for _ in range(count)]


def coreset_from_augmented(
    aug: AugmentedMatrix,
    k: int,
    eps: float,
    p: float,
    seed: int,
    *,
    constants: Constants | None = None,
    count: int | None = None,
) -> SubspaceCoreset:
    """Lewis-weight sampling of the rows of ``B``; only sampled rows are realized."""
    cfg = resolve(constants)
    if count is None:
        count = subspace_size_bound(k, eps, cfg.subspace_size_c)
    F = aug.factored()
    if not np.any(F):
        # all-zero input: a single zero row carrying the whole mass
        pts = np.zeros((1, aug.d + 1))
        return SubspaceCoreset(pts, np.array([aug.n ** (1.0 / p)]), p, k, eps, {"degenerate": True})
    lw = lewis_weights(F, p, seed=_rng.derive_seed(seed, "lewis"), constants=cfg)
    T = build_sampling_matrix(lw, p, count, seed=_rng.derive_seed(seed, "sampling")).merged()
    pts = aug.rows(T.source_rows)
    meta = {
        "sampled": int(count),
        "lewis_total": lw.total,
        "lewis_converged": lw.converged,
        "lewis_guaranteed": lw.guaranteed,
        "source_rows": T.source_rows.tolist(),
    }
    return SubspaceCoreset(pts, T.weights, p, k, eps, meta)


def _max_rel_err(A: PointMatrix, C: SubspaceCoreset, queries, p: float) -> float:
    worst = 0.0
    floor = max(1e-12 * A.scale() ** p, np.finfo(float).tiny)
    for V in queries:
        truth = cost_p(A, V, p)
        approx = eval_subspace_cost(C, V, power=True)
        worst = max(worst, abs(truth - approx) / max(truth, floor))
    return worst


def build_subspace_coreset(
    A,
    k: int,
    eps: float,
    p: float,
    variant: str = "exact",
    seed: int = 0,
    *,
    validate: bool = True,
    threads: int | None = 1,
    constants: Constants | None = None,
) -> SubspaceCoreset:
    """Strong coreset for the rank-k l_p subspace cost of ``A``.

    With ``validate`` the built coreset is checked against the exact cost on
    random rank-k queries and rebuilt from a fresh seed (up to the configured
    number of retries) when the worst relative error exceeds ``eps``; the
    attempt with the smallest error is returned.
    """
    check_params(k=k, eps=eps, p=p)
    cfg = resolve(constants)
    A = as_point_matrix(A)
    if variant not in ("exact", "fast"):
        raise ValueError(f"variant must be 'exact' or 'fast', got {variant!r}")
    attempts = 1 + (cfg.validate_retries if validate else 0)
    queries = (
        random_rank_k_subspaces(A.d, min(k, A.d), cfg.validate_queries, _rng.derive_seed(seed, "validate"))
        if validate
        else []
    )

    best, best_err, report, ell = None, math.inf, None, 0
    history = []
    for attempt in range(attempts):
        s = seed if attempt == 0 else _rng.derive_seed(seed, "retry", attempt)
        if variant == "exact":
            aug, rep = dim_reduce_exact(A, k, eps, p, s, constants=cfg)
        else:
            aug, rep = dim_reduce_sampled(A, k, eps, p, s, threads=threads, constants=cfg)
        C = coreset_from_augmented(aug, k, eps, p, s, constants=cfg)
        err = _max_rel_err(A, C, queries, p) if validate else 0.0
        history.append(err)
        if err < best_err:
            best, best_err, report, ell = C, err, rep, aug.ell
        if err <= eps:
            break
    meta = dict(best.meta)
    meta.update(
        {
            "variant": variant,
            "seed": int(seed),
            "reduction": report.to_dict(),
            "ell": int(ell),
            "validation_errors": history,
            "validated": bool(validate),
        }
    )
    return SubspaceCoreset(best.points, best.row_weights, p, k, eps, meta)


def size_bound(k: int, eps: float, constants: Constants | None = None) -> int:
    return subspace_size_bound(k, eps, resolve(constants).subspace_size_c)
