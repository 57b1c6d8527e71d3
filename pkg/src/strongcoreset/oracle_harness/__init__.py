"""Independent oracles and experiment drivers for checking the library."""

from .adversary import AdversaryResult, proj_adversary
from .bruteforce import BruteForceResult, brute_force_subspace
from .claims import ClaimResult, verify_scalar_claims
from .costs import true_kmedian_cost, true_subspace_cost
from .counterexample import CounterexampleResult, gaussian_counterexample
from .data import decaying_spectrum, gaussian_points, low_rank_plus_noise, planted_clusters
from .distortion import DistortionReport, QueryFamily, measure_distortion, serialize_query

__all__ = [
    "AdversaryResult",
    "proj_adversary",
    "BruteForceResult",
    "brute_force_subspace",
    "ClaimResult",
    "verify_scalar_claims",
    "true_kmedian_cost",
    "true_subspace_cost",
    "CounterexampleResult",
    "gaussian_counterexample",
    "decaying_spectrum",
    "gaussian_points",
    "low_rank_plus_noise",
    "planted_clusters",
    "DistortionReport",
    "QueryFamily",
    "measure_distortion",
    "serialize_query",
]
