"""Random query families and distortion measurement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import _rng
from ..linalg_core import CenterSet, Subspace, orthonormalize

KINDS = ("rank_k_projection", "center_set")


@dataclass(frozen=True)
class QueryFamily:
    """Deterministic stream of random queries.

    ``rank_k_projection`` draws Gaussian ``d x k`` frames and orthonormalizes
    them.  ``center_set`` draws ``k`` centers uniformly from the box
    ``[lo, hi]`` (scalars or per-coordinate arrays).
    """

    kind: str
    count: int
    seed: int
    d: int
    k: int
    box: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be positive")

    def generate(self) -> list:
        rng = _rng.stream(self.seed, "queries")
        if self.kind == "rank_k_projection":
            k = min(self.k, self.d)
            return [orthonormalize(rng.standard_normal((self.d, k))) for _ in range(self.count)]
        lo = np.broadcast_to(np.asarray(self.box[0], dtype=float), (self.d,))
        hi = np.broadcast_to(np.asarray(self.box[1], dtype=float), (self.d,))
        return [CenterSet(lo + (hi - lo) * rng.random((self.k, self.d))) for _ in range(self.count)]

    @classmethod
    def bounding_box(cls, points, count: int, seed: int, k: int) -> "QueryFamily":
        """Center-set family over the bounding box of ``points``."""
        X = np.asarray(points, dtype=float)
        return cls("center_set", count, seed, X.shape[1], k, (X.min(axis=0), X.max(axis=0)))


def serialize_query(q) -> dict:
    if isinstance(q, Subspace):
        return {"kind": "rank_k_projection", "basis": q.basis.tolist()}
    if isinstance(q, CenterSet):
        return {"kind": "center_set", "centers": q.centers.tolist()}
    return {"kind": "raw", "value": np.asarray(q).tolist()}


@dataclass(frozen=True)
class DistortionReport:
    queries: int
    max_rel_err: float
    mean_rel_err: float
    p95_rel_err: float
    worst_query: dict | None
    per_query: list | None = None
    empty: bool = False
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "queries": self.queries,
            "max_rel_err": self.max_rel_err,
            "mean_rel_err": self.mean_rel_err,
            "p95_rel_err": self.p95_rel_err,
            "worst_query": self.worst_query,
            "per_query": self.per_query,
            "empty": self.empty,
            "meta": self.meta,
        }


def measure_distortion(
    truth: Callable,
    approx: Callable,
    family,
    *,
    scale: float = 1.0,
    threads: int | None = 1,
    trace: bool = False,
) -> DistortionReport:
    """Relative errors ``|truth(q) - approx(q)| / max(truth(q), 1e-12 * scale)``.

    ``family`` is a :class:`QueryFamily` or an explicit list of queries.
    Queries are evaluated in parallel and reassembled by index.
    """
    queries = family.generate() if isinstance(family, QueryFamily) else list(family)
    if not queries:
        return DistortionReport(0, 0.0, 0.0, 0.0, None, [] if trace else None, empty=True)
    floor = 1e-12 * max(float(scale), np.finfo(float).tiny)

    def one(q):
        t = float(truth(q))
        a = float(approx(q))
        return t, a, abs(t - a) / max(t, floor)

    results = _rng.parallel_map(one, queries, threads)
    errs = np.array([r[2] for r in results])
    worst = int(np.argmax(errs))
    per = [{"truth": t, "approx": a, "rel_err": e} for t, a, e in results] if trace else None
    mean = float(errs.mean())
    p95 = float(np.quantile(errs, 0.95))
    mx = float(errs.max())
    # quantile interpolation can dip below the mean on tiny samples
    p95 = min(max(p95, mean), mx)
    return DistortionReport(len(queries), mx, mean, p95, serialize_query(queries[worst]), per)
