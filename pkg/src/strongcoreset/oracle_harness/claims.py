"""Randomized checks of the scalar inequalities used in the analysis.

Each check draws tuples from the claim's hypothesis domain and counts
violations ``lhs > rhs + slack`` where the slack is ``1e-9`` times the
largest magnitude involved.  Exponents and accuracy parameters are drawn
partly log-uniformly so that boundary regimes are exercised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _rng

SLACK = 1e-9


@dataclass(frozen=True)
class ClaimResult:
    name: str
    samples: int
    violations: int
    max_excess: float
    worst: dict | None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "samples": self.samples,
            "violations": self.violations,
            "max_excess": self.max_excess,
            "worst": self.worst,
            "meta": self.meta,
        }


def _tally(name, lhs, rhs, magnitude, params: dict, meta=None) -> ClaimResult:
    excess = (lhs - rhs) / np.maximum(magnitude, np.finfo(float).tiny)
    bad = excess > SLACK
    worst = None
    if lhs.size:
        j = int(np.argmax(excess))
        worst = {key: float(v[j]) for key, v in params.items()}
        worst.update(lhs=float(lhs[j]), rhs=float(rhs[j]))
    return ClaimResult(
        name, int(lhs.size), int(bad.sum()), float(excess.max()) if lhs.size else 0.0, worst, meta or {}
    )


def _eps(rng, n):
    # half uniform, half log-uniform down to 1e-4
    u = rng.random(n)
    return np.where(rng.random(n) < 0.5, np.maximum(u, 1e-12), 10.0 ** (-4 * u))


def _triangle(rng, n):
    """``b >= c >= 0`` and ``a = sqrt(b^2 - c^2)``."""
    b = 10.0 ** rng.uniform(-3, 3, n)
    c = b * rng.random(n)
    edge = rng.random(n) < 0.05
    c[edge] = b[edge]
    a = np.sqrt(np.maximum(b * b - c * c, 0.0))
    return a, b, c


def claim_one(samples: int, seed: int) -> ClaimResult:
    """``a^2 = b^2 - c^2`` and ``p >= 2`` imply ``a^p <= b^p - c^p``."""
    rng = _rng.stream(seed, "claims", 1)
    a, b, c = _triangle(rng, samples)
    p = rng.uniform(2.0, 8.0, samples)
    p[rng.random(samples) < 0.05] = 2.0
    lhs, rhs = a**p, b**p - c**p
    return _tally("claim_one", lhs, rhs, b**p, {"a": a, "b": b, "c": c, "p": p})


def claim_two(samples: int, seed: int) -> ClaimResult:
    """``a^2 = b^2 - c^2``, ``a^p >= eps b^p``, ``b >= c``, ``1 <= p <= 2`` imply
    ``a^p <= 10 eps^((p-2)/p) (b^p - c^p)``.

    Tuples are drawn by rejection on the constraint ``a^p >= eps b^p``; the
    acceptance rate is reported.
    """
    rng = _rng.stream(seed, "claims", 2)
    chunks, drawn, kept = [], 0, 0
    while kept < samples:
        m = max(2 * (samples - kept), 1024)
        a, b, c = _triangle(rng, m)
        p = rng.uniform(1.0, 2.0, m)
        eps = _eps(rng, m)
        ok = a**p >= eps * b**p
        drawn += m
        kept += int(ok.sum())
        chunks.append((a[ok], b[ok], c[ok], p[ok], eps[ok]))
    a, b, c, p, eps = (np.concatenate(x)[:samples] for x in zip(*chunks))
    lhs = a**p
    rhs = 10.0 * eps ** ((p - 2.0) / p) * (b**p - c**p)
    meta = {"acceptance_rate": kept / drawn, "drawn": drawn}
    return _tally("claim_two", lhs, rhs, b**p, {"a": a, "b": b, "c": c, "p": p, "eps": eps}, meta)


def claim_four(samples: int, seed: int) -> ClaimResult:
    """``0 < p <= 1`` implies ``|(a+x)^p - (b+x)^p| <= |a^p - b^p|``."""
    rng = _rng.stream(seed, "claims", 4)
    a = 10.0 ** rng.uniform(-3, 3, samples)
    b = 10.0 ** rng.uniform(-3, 3, samples)
    x = 10.0 ** rng.uniform(-3, 3, samples)
    zero = rng.random(samples)
    a[zero < 0.03] = 0.0
    x[zero > 0.97] = 0.0
    p = np.maximum(rng.random(samples), 1e-3)
    p[rng.random(samples) < 0.05] = 1.0
    lhs = np.abs((a + x) ** p - (b + x) ** p)
    rhs = np.abs(a**p - b**p)
    mag = np.maximum.reduce([(a + x) ** p, (b + x) ** p, a**p, b**p])
    return _tally("claim_four", lhs, rhs, mag, {"a": a, "b": b, "x": x, "p": p})


def claim_five(samples: int, seed: int) -> ClaimResult:
    """``(a+b)^p <= (1+eps) a^p + (1+2p/eps)^p b^p`` for ``p in [1, 8]``."""
    rng = _rng.stream(seed, "claims", 5)
    a = 10.0 ** rng.uniform(-3, 3, samples)
    b = a * 10.0 ** rng.uniform(-6, 1, samples)
    b[rng.random(samples) < 0.03] = 0.0
    p = rng.uniform(1.0, 8.0, samples)
    p[rng.random(samples) < 0.05] = 1.0
    eps = _eps(rng, samples)
    lhs = (a + b) ** p
    rhs = (1.0 + eps) * a**p + (1.0 + 2.0 * p / eps) ** p * b**p
    return _tally("claim_five", lhs, rhs, np.maximum(lhs, rhs), {"a": a, "b": b, "p": p, "eps": eps})


def lemma_numbers(samples: int, seed: int) -> ClaimResult:
    """``|sqrt(a^2+b^2) - sqrt(f^2+g^2)| <= |a-f| + |b-g|``."""
    rng = _rng.stream(seed, "claims", 6)
    a, b, f, g = (rng.standard_normal(samples) * 10.0 ** rng.uniform(-3, 3, samples) for _ in range(4))
    same = rng.random(samples) < 0.03
    f[same], g[same] = a[same], b[same]
    lhs = np.abs(np.hypot(a, b) - np.hypot(f, g))
    rhs = np.abs(a - f) + np.abs(b - g)
    mag = np.maximum(np.hypot(a, b), np.hypot(f, g))
    return _tally("lemma_numbers", lhs, rhs, mag, {"a": a, "b": b, "f": f, "g": g})


CLAIMS = {
    "claim_one": claim_one,
    "claim_two": claim_two,
    "claim_four": claim_four,
    "claim_five": claim_five,
    "lemma_numbers": lemma_numbers,
}


def verify_scalar_claims(samples: int, seed: int = 0) -> dict:
    """Run every claim check; returns ``{"total_violations", "claims": {...}}``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    results = {name: fn(samples, seed).to_dict() for name, fn in CLAIMS.items()}
    return {
        "samples": samples,
        "seed": seed,
        "slack": SLACK,
        "total_violations": sum(r["violations"] for r in results.values()),
        "claims": results,
    }
