"""Grid-search adversary for the projection lemma.

For a subspace ``S`` and a one-dimensional augmentation ``span(v)`` with
``v`` orthogonal to ``S``, the rows of ``A P* - A P`` are ``(a_i . v) v``, so
the adversary maximizes ``sum_i |a_i . v|^p`` over unit ``v`` in the
orthogonal complement of ``S``.  The complement is searched with an angular
grid followed by Nelder-Mead polish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.linalg import null_space

from ..linalg_core import PointMatrix, Subspace


@dataclass(frozen=True)
class AdversaryResult:
    value: float
    direction: np.ndarray
    grid_points: int


def _sphere(angles: np.ndarray, dim: int) -> np.ndarray:
    if dim == 2:
        return np.stack([np.cos(angles[..., 0]), np.sin(angles[..., 0])], axis=-1)
    th, ph = angles[..., 0], angles[..., 1]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def proj_adversary(A, S: Subspace, p: float, *, resolution: int = 720) -> AdversaryResult:
    """Worst ``||A P - A P*||_{p,2}^p`` over ``S* = S + span(v)``, complement dim <= 3."""
    X = np.asarray(A.to_dense() if isinstance(A, PointMatrix) else A, dtype=float)
    basis = S.basis if S.ell else np.zeros((X.shape[1], 0))
    Q = null_space(basis.T) if basis.shape[1] else np.eye(X.shape[1])
    r = Q.shape[1]
    if r == 0:
        return AdversaryResult(0.0, np.zeros(X.shape[1]), 0)
    Y = X @ Q

    def value(u):
        return float(np.sum(np.abs(Y @ u) ** p))

    if r == 1:
        return AdversaryResult(value(np.ones(1)), Q[:, 0].copy(), 1)
    if r > 3:
        raise ValueError(f"adversary supports complement dimension <= 3, got {r}")
    if r == 2:
        grid = np.linspace(0.0, np.pi, resolution, endpoint=False)[:, None]
    else:
        th = np.linspace(0.0, np.pi / 2, resolution // 4 + 1)
        ph = np.linspace(0.0, 2 * np.pi, resolution, endpoint=False)
        grid = np.array(np.meshgrid(th, ph, indexing="ij")).reshape(2, -1).T
    U = _sphere(grid, r)
    vals = np.sum(np.abs(Y @ U.T) ** p, axis=0)
    j = int(np.argmax(vals))
    res = scipy.optimize.minimize(
        lambda t: -value(_sphere(t, r)), grid[j], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14}
    )
    best = grid[j] if -res.fun < vals[j] else res.x
    u = _sphere(best, r)
    return AdversaryResult(max(float(vals[j]), -float(res.fun)), Q @ u, grid.shape[0])
