"""Reproduction of the Gaussian example showing why one additive constant fails.

Points with i.i.d. N(0, 1/d) coordinates have norm about 1 and sit almost
entirely outside any low-dimensional subspace.  For a unit query point ``q``
inside the best rank-ell subspace, projecting and adding the residual length
once estimates each distance as about 2 while the truth is about sqrt(2).
Appending the residual as an orthogonal coordinate gives
sqrt(dist(proj, q)^2 + residual^2), which is accurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _rng


@dataclass(frozen=True)
class CounterexampleResult:
    naive_estimate: float
    true_cost: float
    augmented_estimate: float
    n: int
    d: int
    ell: int
    seed: int

    @property
    def naive_ratio(self) -> float:
        return self.naive_estimate / self.true_cost

    @property
    def augmented_ratio(self) -> float:
        return self.augmented_estimate / self.true_cost

    def to_dict(self) -> dict:
        return {
            "naive_estimate": self.naive_estimate,
            "true_cost": self.true_cost,
            "augmented_estimate": self.augmented_estimate,
            "naive_ratio": self.naive_ratio,
            "augmented_ratio": self.augmented_ratio,
            "n": self.n,
            "d": self.d,
            "ell": self.ell,
            "seed": self.seed,
        }


def gaussian_counterexample(n: int, d: int, ell: int, seed: int = 0) -> CounterexampleResult:
    """Naive, true and augmented sums of distances to a unit query point.

    Requires ``n >= 1000`` and ``d >= 20 * ell``; ``ell == d`` is accepted as
    the no-reduction control, where all three numbers coincide.
    """
    if n < 1000:
        raise ValueError(f"need n >= 1000, got {n}")
    if ell < 1 or ell > d:
        raise ValueError(f"need 1 <= ell <= d, got ell={ell}, d={d}")
    if ell != d and d < 20 * ell:
        raise ValueError(f"need d >= 20*ell (or ell == d), got d={d}, ell={ell}")
    rng = _rng.stream(seed, "data")
    A = rng.standard_normal((n, d)) / np.sqrt(d)
    _, _, Vt = np.linalg.svd(A, full_matrices=False)
    U = Vt[:ell].T
    q = U[:, 0]
    proj = (A @ U) @ U.T
    resid = np.linalg.norm(A - proj, axis=1)
    in_span = np.linalg.norm(proj - q, axis=1)
    true = float(np.sum(np.linalg.norm(A - q, axis=1)))
    naive = float(np.sum(in_span) + np.sum(resid))
    aug = float(np.sum(np.sqrt(in_span**2 + resid**2)))
    return CounterexampleResult(naive, true, aug, n, d, ell, seed)
