"""Verification suites shared by the ``verify`` command and the test suite.

Each suite returns a JSON-ready dict with a boolean ``passed`` plus the
numbers it was decided on.  Instance sizes default to the desk-scale
settings used by the acceptance tests.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .. import _rng
from ..config import Constants, resolve
from ..dimreduce import dim_reduce_exact, irls_subspace, realized_cost
from ..kmedian_coreset import build_kmedian_coreset, eval_kmedian_cost, local_search_kmedian
from ..linalg_core import CenterSet, Subspace, as_point_matrix, orthonormalize
from ..sketching import build_sampling_matrix, exact_leverage_scores, lewis_weights, median_residuals
from ..subspace_coreset import build_subspace_coreset, eval_subspace_cost, size_bound as subspace_size
from ..kmedian_coreset import size_bound as kmedian_size
from .adversary import proj_adversary
from .bruteforce import brute_force_subspace
from .claims import verify_scalar_claims
from .costs import true_kmedian_cost, true_subspace_cost
from .counterexample import gaussian_counterexample
from .data import decaying_spectrum, low_rank_plus_noise, planted_clusters
from .distortion import QueryFamily, measure_distortion

SUITES = ("claims", "subspace", "kmedian", "dimreduce", "proj", "counterexample", "sketching")


def _frac(flags) -> float:
    flags = list(flags)
    return sum(flags) / len(flags) if flags else 0.0


def claims_suite(samples: int = 100_000, seed: int = 0) -> dict:
    rep = verify_scalar_claims(samples, seed)
    rep["passed"] = rep["total_violations"] == 0
    return rep


def subspace_trial(
    A, k: int, eps: float, p: float, seed: int, *, queries: int = 200, adaptive: int = 20,
    validate: bool = False, variant: str = "exact", threads=1, constants: Constants | None = None,
) -> dict:
    """One coreset build scored on random and adaptively chosen rank-k queries.

    Adaptive queries are IRLS minimizers of the coreset cost started from
    different seeds, so they depend on the sampled rows.
    """
    A = as_point_matrix(A)
    t0 = time.perf_counter()
    C = build_subspace_coreset(A, k, eps, p, variant, seed, validate=validate, threads=threads, constants=constants)
    build_time = time.perf_counter() - t0

    def truth(V):
        return true_subspace_cost(A, V, p) ** (1.0 / p)

    def approx(V):
        return eval_subspace_cost(C, V)

    fam = QueryFamily("rank_k_projection", queries, _rng.derive_seed(seed, "queries"), A.d, k)
    rand = measure_distortion(truth, approx, fam, scale=A.scale(), threads=threads)
    adv = []
    for j in range(adaptive):
        V, _ = irls_subspace(
            C.projected, min(k, A.d), p, row_weights=C.row_weights**p, offsets=C.tail,
            seed=_rng.derive_seed(seed, "adaptive", j), restarts=1,
        )
        adv.append(V)
    adap = measure_distortion(truth, approx, adv, scale=A.scale(), threads=threads)
    worst = max(rand.max_rel_err, adap.max_rel_err)
    return {
        "seed": seed,
        "s": C.s,
        "size_bound": subspace_size(k, eps, constants),
        "ell": C.meta.get("ell"),
        "random_max_rel_err": rand.max_rel_err,
        "adaptive_max_rel_err": adap.max_rel_err,
        "max_rel_err": worst,
        "within_eps": worst <= eps,
        "build_seconds": build_time,
    }


def subspace_suite(
    A=None, k: int = 3, eps: float = 0.25, p: float = 1.0, seeds=range(20), *, validate: bool = False,
    queries: int = 200, adaptive: int = 20, threads=1, constants: Constants | None = None,
) -> dict:
    if A is None:
        A = low_rank_plus_noise(500, 40, k, 0.5, seed=2024)
    trials = [
        subspace_trial(A, k, eps, p, s, queries=queries, adaptive=adaptive, validate=validate,
                       threads=threads, constants=constants)
        for s in seeds
    ]
    rate = _frac(t["within_eps"] for t in trials)
    sizes_ok = all(t["s"] <= t["size_bound"] for t in trials)
    need = 0.95 if validate else 0.6
    return {"trials": trials, "success_rate": rate, "required_rate": need, "sizes_ok": sizes_ok,
            "passed": rate >= need and sizes_ok}


def kmedian_trial(A, k: int, eps: float, seed: int, *, queries: int = 200, threads=1,
                  constants: Constants | None = None) -> dict:
    A = as_point_matrix(A)
    X = A.to_dense()
    t0 = time.perf_counter()
    C = build_kmedian_coreset(X, k, eps, seed, threads=threads, constants=constants)
    build_time = time.perf_counter() - t0
    fam = QueryFamily.bounding_box(X, queries, _rng.derive_seed(seed, "queries"), k)
    rand = measure_distortion(
        lambda c: true_kmedian_cost(X, c), lambda c: eval_kmedian_cost(C, c), fam, scale=A.scale(), threads=threads
    )
    # adaptive: centers optimized on the coreset vs on the data, same procedure
    ls_seed = _rng.derive_seed(seed, "adaptive")
    on_core = local_search_kmedian(C.projected, k, ls_seed, weights=C.weights, tails=C.tail)
    direct = local_search_kmedian(X, k, ls_seed)
    adap = measure_distortion(
        lambda c: true_kmedian_cost(X, c), lambda c: eval_kmedian_cost(C, c), [on_core, direct], scale=A.scale()
    )
    ratio = true_kmedian_cost(X, on_core) / true_kmedian_cost(X, direct)
    worst = max(rand.max_rel_err, adap.max_rel_err)
    return {
        "seed": seed,
        "s": C.s,
        "size_bound": kmedian_size(k, eps, constants),
        "random_max_rel_err": rand.max_rel_err,
        "adaptive_max_rel_err": adap.max_rel_err,
        "max_rel_err": worst,
        "within_eps": worst <= eps,
        "adaptive_ratio": ratio,
        "adaptive_ok": ratio <= 1 + 5 * eps,
        "build_seconds": build_time,
    }


def kmedian_suite(A=None, k: int = 3, eps: float = 0.3, seeds=range(20), *, queries: int = 200, threads=1,
                  constants: Constants | None = None) -> dict:
    if A is None:
        A = planted_clusters(400, 30, k, seed=2024)
    trials = [kmedian_trial(A, k, eps, s, queries=queries, threads=threads, constants=constants) for s in seeds]
    rate = _frac(t["within_eps"] for t in trials)
    adaptive_ok = all(t["adaptive_ok"] for t in trials)
    sizes_ok = all(t["s"] <= t["size_bound"] for t in trials)
    return {"trials": trials, "success_rate": rate, "required_rate": 0.6, "adaptive_ok": adaptive_ok,
            "sizes_ok": sizes_ok, "passed": rate >= 0.6 and adaptive_ok and sizes_ok}


def dimreduce_suite(instances: int = 10, n: int = 200, d: int = 20, k: int = 2, eps: float = 0.4, p: float = 1.0,
                    queries: int = 500, seed: int = 0, slack: float = 1.05, decay: float = 0.35,
                    constants: Constants | None = None) -> dict:
    """B from the exact reduction at eps/2 against random rank-k projections."""
    rows = []
    for i in range(instances):
        s = _rng.derive_seed(seed, "data", i)
        A = as_point_matrix(decaying_spectrum(n, d, decay, seed=s))
        aug, rep = dim_reduce_exact(A, k, eps / 2, p, s, constants=constants)
        fam = QueryFamily("rank_k_projection", queries, _rng.derive_seed(s, "queries"), d, k)
        r = measure_distortion(
            lambda V: true_subspace_cost(A, V, p) ** (1 / p),
            lambda V: realized_cost(aug, V, p) ** (1 / p),
            fam,
            scale=A.scale(),
        )
        rows.append({"instance": i, "ell": aug.ell, "iterations": rep.iterations, "max_rel_err": r.max_rel_err,
                     "violations": int(r.max_rel_err > slack * eps)})
    total = sum(r["violations"] for r in rows)
    return {"instances": rows, "violations": total, "bound": slack * eps, "passed": total == 0}


def proj_instance(seed: int, p: float, n: int = 40) -> np.ndarray:
    """Nearly planar 3-d data; the small third scale lets the reduction stop
    short of the full space for some seeds."""
    rng = _rng.stream(seed, "data")
    sigma = 10.0 ** rng.uniform(-4, -1)
    return rng.standard_normal((n, 3)) * np.array([3.0, 1.0, sigma])


def proj_suite(seeds=range(10), ps=(1.0, 2.0), eps: float = 0.5, k: int = 1, oracle_eps: float = 0.01,
               constants: Constants | None = None) -> dict:
    """Worst one-dimensional augmentation of the final subspace vs ``eps * opt``."""
    rows = []
    for p in ps:
        for s in seeds:
            A = proj_instance(s, p)
            aug, _ = dim_reduce_exact(A, k, eps, p, s, constants=constants)
            opt = brute_force_subspace(A, k, p, oracle_eps)
            adv = proj_adversary(A, aug.basis, p)
            # the certified lower bound keeps the check conservative
            bound = eps * opt.lower_bound
            rows.append({"p": p, "seed": s, "ell": aug.ell, "adversary": adv.value, "opt_lower": opt.lower_bound,
                         "certified": opt.certified, "ratio": adv.value / max(opt.lower_bound, 1e-300),
                         "violation": bool(adv.value > bound)})
    total = sum(r["violation"] for r in rows)
    nontrivial = sum(r["ell"] < 3 for r in rows)
    return {"rows": rows, "violations": total, "nontrivial": nontrivial, "passed": total == 0}


def counterexample_suite(seeds=range(10), n: int = 2000, d: int = 500, ell: int = 5) -> dict:
    rows = [gaussian_counterexample(n, d, ell, s).to_dict() for s in seeds]
    for r in rows:
        r["ok"] = 1.30 <= r["naive_ratio"] <= 1.50 and abs(r["augmented_ratio"] - 1.0) <= 0.05
    passes = sum(r["ok"] for r in rows)
    return {"rows": rows, "passes": passes, "passed": passes == len(rows)}


def lewis_vs_leverage(seed: int = 0, n: int = 200, m: int = 6) -> float:
    """Max relative gap between exact p=2 Lewis weights and SVD leverage scores."""
    M = _rng.stream(seed, "data").standard_normal((n, m))
    U, _, _ = np.linalg.svd(M, full_matrices=False)
    lev = np.sum(U * U, axis=1)
    lw = lewis_weights(M, 2.0, exact=True).w
    return float(np.max(np.abs(lw - lev) / lev))


def l1_embedding_trial(seed: int, n: int = 2000, m: int = 8, eps: float = 0.25, directions: int = 50,
                       count: int | None = None) -> dict:
    """Lewis-weight sampling of a heavy-tailed ``n x m`` matrix tested on random ``x``."""
    rng = _rng.stream(seed, "data")
    M = rng.standard_normal((n, m)) * rng.standard_cauchy((n, 1))
    if count is None:
        count = math.ceil(m * math.log(m / eps**2) / eps**2)
    lw = lewis_weights(M, 1.0, seed=_rng.derive_seed(seed, "lewis"))
    T = build_sampling_matrix(lw, 1.0, count, seed=_rng.derive_seed(seed, "sampling"))
    X = _rng.stream(seed, "queries").standard_normal((m, directions))
    full = np.sum(np.abs(M @ X), axis=0)
    sk = np.sum(np.abs(T.apply(M) @ X), axis=0)
    err = float(np.max(np.abs(sk / full - 1.0)))
    return {"seed": seed, "count": count, "max_rel_err": err, "ok": err <= eps}


def median_residual_error(seed: int, n: int = 100, d: int = 30, ell: int = 6, eps: float = 0.25,
                          width: int | None = None) -> float:
    rng = _rng.stream(seed, "data")
    A = rng.standard_normal((n, d))
    S = orthonormalize(rng.standard_normal((d, ell)))
    est = median_residuals(A, S, eps, seed=_rng.derive_seed(seed, "median"), width=width)
    exact = np.linalg.norm(A - (A @ S.basis) @ S.basis.T, axis=1)
    return float(np.max(np.abs(est - exact) / exact))


def duplicate_split_error(seed: int, n: int = 60, m: int = 4, copies: int = 5, p: float = 1.0) -> float:
    """Copies of a row share the weight it has when scaled by ``copies^{1/p}``.

    Lewis weights depend only on ``sum_i w_i^{1-2/p} a_i a_i^T``-type
    statistics, so ``r`` identical rows behave like one row scaled by
    ``r^{1/p}`` whose weight splits evenly over the copies.
    """
    rng = _rng.stream(seed, "data")
    M = rng.standard_normal((n, m))
    j = int(rng.integers(n))
    dup = np.vstack([M, np.repeat(M[j : j + 1], copies - 1, axis=0)])
    merged = M.copy()
    merged[j] *= copies ** (1.0 / p)
    w_dup = lewis_weights(dup, p, iters=200, exact=True).w
    w_merged = lewis_weights(merged, p, iters=200, exact=True).w
    share = w_merged[j] / copies
    idx = [j] + list(range(n, n + copies - 1))
    return float(np.max(np.abs(w_dup[idx] - share) / share))


def sketching_suite(seeds=range(20), seed: int = 0) -> dict:
    a = max(lewis_vs_leverage(_rng.derive_seed(seed, "data", i)) for i in range(5))
    b_rows = [l1_embedding_trial(s) for s in seeds]
    b_rate = _frac(r["ok"] for r in b_rows)
    c = max(median_residual_error(_rng.derive_seed(seed, "median", i)) for i in range(5))
    dd = max(duplicate_split_error(_rng.derive_seed(seed, "lewis", i)) for i in range(5))
    res = {
        "lewis_p2_vs_leverage": {"max_rel_err": a, "ok": a <= 1e-6},
        "l1_embedding": {"trials": b_rows, "success_rate": b_rate, "ok": b_rate >= 0.9},
        "median_residuals": {"max_rel_err": c, "ok": c <= 0.25},
        "duplicate_split": {"max_rel_err": dd, "ok": dd <= 0.05},
    }
    res["passed"] = all(v["ok"] for v in res.values())
    return res


def run_suite(name: str, *, samples: int | None = None, seed: int = 0, k=None, eps=None, p=None, A=None,
              threads=1, constants: Constants | None = None) -> dict:
    """Dispatch used by the CLI; unspecified parameters take suite defaults."""
    cfg = resolve(constants)
    if name == "claims":
        return claims_suite(samples or 100_000, seed)
    if name == "subspace":
        kw = {k_: v for k_, v in (("k", k), ("eps", eps), ("p", p)) if v is not None}
        return subspace_suite(A, seeds=range(seed, seed + (samples or 20)), threads=threads, constants=cfg, **kw)
    if name == "kmedian":
        kw = {k_: v for k_, v in (("k", k), ("eps", eps)) if v is not None}
        return kmedian_suite(A, seeds=range(seed, seed + (samples or 20)), threads=threads, constants=cfg, **kw)
    if name == "dimreduce":
        kw = {k_: v for k_, v in (("k", k), ("eps", eps), ("p", p)) if v is not None}
        return dimreduce_suite(instances=samples or 10, seed=seed, constants=cfg, **kw)
    if name == "proj":
        kw = {"eps": eps} if eps is not None else {}
        return proj_suite(seeds=range(seed, seed + (samples or 10)), constants=cfg, **kw)
    if name == "counterexample":
        return counterexample_suite(seeds=range(seed, seed + (samples or 10)))
    if name == "sketching":
        return sketching_suite(seeds=range(seed, seed + (samples or 20)), seed=seed)
    raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
