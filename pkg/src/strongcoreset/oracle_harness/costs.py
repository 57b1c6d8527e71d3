"""Reference cost evaluators.

These deliberately avoid ``linalg_core``'s projection and norm helpers so
they can be used to cross-check them: subspace residuals come from a
least-squares solve against the raw basis, and k-median costs from an
exhaustive per-center scan.
"""

from __future__ import annotations

import numpy as np

from ..linalg_core import CenterSet, PointMatrix, Subspace


def _dense(A) -> np.ndarray:
    if isinstance(A, PointMatrix):
        return A.to_dense()
    if hasattr(A, "toarray"):
        return np.asarray(A.toarray(), dtype=float)
    return np.asarray(A, dtype=float)


def true_subspace_cost(A, V, p: float) -> float:
    """Sum of p-th powers of distances from rows of ``A`` to ``span(V)``.

    ``V`` may be a :class:`Subspace` or any ``d x m`` matrix; rank-deficient
    matrices are treated as their column span.
    """
    X = _dense(A)
    basis = V.basis if isinstance(V, Subspace) else np.asarray(V, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != X.shape[1]:
        raise ValueError(f"dimension mismatch: points in R^{X.shape[1]}, basis has {basis.shape[0]} rows")
    if X.shape[0] == 0:
        return 0.0
    if basis.shape[1] == 0 or not np.any(basis):
        R = X
    else:
        coef, *_ = np.linalg.lstsq(basis, X.T, rcond=None)
        R = X - (basis @ coef).T
    dist = np.sqrt(np.sum(R * R, axis=1))
    return float(np.sum(dist**p))


def true_kmedian_cost(A, C) -> float:
    """``sum_i min_c ||A_i - c||`` by scanning every center."""
    X = _dense(A)
    centers = C.centers if isinstance(C, CenterSet) else np.asarray(C, dtype=float)
    if centers.ndim != 2 or centers.shape[0] == 0:
        raise ValueError("center set must be non-empty")
    if centers.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: points in R^{X.shape[1]}, centers in R^{centers.shape[1]}")
    best = np.full(X.shape[0], np.inf)
    for c in centers:
        diff = X - c
        best = np.minimum(best, np.sqrt(np.sum(diff * diff, axis=1)))
    return float(np.sum(best))
