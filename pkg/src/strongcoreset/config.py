"""Library-wide tolerances and tunable constants.

None of the multipliers below come with a canonical value; the defaults are
chosen so the desk-scale verification suite passes.  Every pipeline accepts a
``Constants`` instance, and the CLI can override fields from a JSON file or
environment variables.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Constants:
    # linalg_core
    orthonormality_tol: float = 1e-10
    rank_tol: float = 1e-10
    dense_density_threshold: float = 0.25

    # sketching
    regression_sketch_c: float = 20.0
    leverage_sketch_c: float = 20.0
    gaussian_cols_c: float = 8.0
    median_repeats_c: float = 8.0
    lewis_clamp_min: float = 1e-12
    lewis_nonconvergence: float = 0.5
    lewis_damping_high_p: float = 0.5

    # dimreduce
    tau_divisor: float = 8.0
    drop_divisor: float = 80.0
    irls_floor: float = 1e-8
    irls_max_iter: int = 100
    irls_tol: float = 1e-10
    irls_restarts: int = 3
    augment_grid_cells: int = 100_000

    # coresets
    subspace_size_c: float = 0.25
    kmedian_size_c: float = 0.5
    sensitivity_total_c: float = 3.0
    validate_queries: int = 50
    validate_retries: int = 3

    # k-median local search
    bicriteria_rounds: int = 20
    weiszfeld_tol: float = 1e-7
    weiszfeld_max_iter: int = 200

    # oracle harness
    rel_err_floor: float = 1e-12
    claim_slack: float = 1e-9

    def replace(self, **changes) -> "Constants":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Constants":
        known = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown constants: {sorted(unknown)}")
        base = cls()
        cast = {}
        for name, value in data.items():
            kind = type(getattr(base, name))
            cast[name] = kind(value)
        return dataclasses.replace(base, **cast)

    @classmethod
    def from_json(cls, path: str | Path) -> "Constants":
        return cls.from_dict(json.loads(Path(path).read_text()))


DEFAULT = Constants()


def resolve(constants: Constants | None) -> Constants:
    return DEFAULT if constants is None else constants


def reduction_exponent(p: float) -> float:
    """Exponent ``max(2/p, 1)`` applied to epsilon in the drop thresholds."""
    return max(2.0 / p, 1.0)


def subspace_size_bound(k: int, eps: float, c: float) -> int:
    # ln(k/eps) vanishes at k=1, eps=1; floor the log at 1 so the bound stays positive
    return max(1, math.ceil(c * k * max(math.log(k / eps), 1.0) / eps**4))


def kmedian_size_bound(k: int, eps: float, c: float) -> int:
    return max(1, math.ceil(c * k**2 * math.log(max(k, 2)) / eps**4))


def check_params(*, k: int | None = None, eps: float | None = None, p: float | None = None) -> None:
    if k is not None and (int(k) != k or k < 1):
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if eps is not None and not (0.0 < eps <= 1.0):
        raise ValueError(f"epsilon must lie in (0, 1], got {eps!r}")
    if p is not None and not (p >= 1.0 and math.isfinite(p)):
        raise ValueError(f"p must be a finite real >= 1, got {p!r}")
