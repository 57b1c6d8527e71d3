"""Strong coresets for k-median and l_p subspace approximation.

Points are reduced to a low-dimensional subspace and each keeps its
residual distance as one extra coordinate that queries never project.
"""

__version__ = "0.1.0"

from .config import DEFAULT, Constants
from .containers import Container, from_container, read_container, to_container, write_container
from .dimreduce import (
    AugmentedMatrix,
    ReductionReport,
    approx_projection_rows,
    approx_subspace,
    dim_reduce_exact,
    dim_reduce_sampled,
)
from .ingest import ingest
from .kmedian_coreset import WeightedCoreset, build_kmedian_coreset, eval_kmedian_cost
from .linalg_core import CenterSet, PointMatrix, Subspace, cost_p, norm_p2
from .subspace_coreset import SubspaceCoreset, build_subspace_coreset, eval_subspace_cost

__all__ = [
    "__version__",
    "DEFAULT",
    "Constants",
    "Container",
    "from_container",
    "read_container",
    "to_container",
    "write_container",
    "AugmentedMatrix",
    "ReductionReport",
    "approx_projection_rows",
    "approx_subspace",
    "dim_reduce_exact",
    "dim_reduce_sampled",
    "ingest",
    "WeightedCoreset",
    "build_kmedian_coreset",
    "eval_kmedian_cost",
    "CenterSet",
    "PointMatrix",
    "Subspace",
    "cost_p",
    "norm_p2",
    "SubspaceCoreset",
    "build_subspace_coreset",
    "eval_subspace_cost",
]
