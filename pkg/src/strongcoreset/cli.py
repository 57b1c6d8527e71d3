"""Command-line interface.

Every flag can also be supplied through an environment variable named
``STRONGCORESET_<FLAG>`` (upper case, dashes as underscores); explicit flags
win.  Failures print a JSON error document to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULT, Constants, check_params
from .containers import Container, dump_json, from_container, read_container, to_container, write_container
from .dimreduce import dim_reduce_exact, dim_reduce_sampled
from .ingest import FORMATS, ingest
from .kmedian_coreset import build_kmedian_coreset, eval_kmedian_cost
from .linalg_core import CenterSet, Subspace, orthonormalize
from .oracle_harness import gaussian_counterexample, low_rank_plus_noise, planted_clusters
from .oracle_harness.suites import SUITES, run_suite
from .subspace_coreset import build_subspace_coreset, eval_subspace_cost

ENV_PREFIX = "STRONGCORESET_"
REPORT_SCHEMA = "strongcoreset.report/1"
ERROR_SCHEMA = "strongcoreset.error/1"
COMMANDS = ("reduce", "coreset-subspace", "coreset-kmedian", "eval", "verify", "counterexample", "bench", "replay")
# fields that do not affect artifact content and are left out of embedded configs
_NOT_EMBEDDED = ("threads", "output", "constants_path")


class CLIError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    k: int = 3
    epsilon: float = 0.25
    p: float = 1.0
    variant: str = "exact"
    seed: int = 0
    input: str | None = None
    format: str = "dense_csv"
    output: str | None = None
    queries: str | None = None
    suite: str = "claims"
    samples: int | None = None
    threads: int | None = None
    encoding: str = "binary"
    validate: bool = True
    n: int = 2000
    d: int = 500
    ell: int = 5
    constants_path: str | None = None
    constants: dict = field(default_factory=dict)

    def validate_ranges(self) -> None:
        try:
            check_params(k=self.k, eps=self.epsilon, p=self.p)
        except ValueError as exc:
            raise CLIError(str(exc)) from None
        if self.variant not in ("exact", "fast"):
            raise CLIError(f"variant must be 'exact' or 'fast', got {self.variant!r}")
        if self.format not in FORMATS:
            raise CLIError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.samples is not None and self.samples < 1:
            raise CLIError("samples must be >= 1")

    def resolved_constants(self) -> Constants:
        return Constants.from_dict(self.constants) if self.constants else DEFAULT

    def embedded(self) -> dict:
        """Replay document: everything that determines the artifact."""
        doc = {k: v for k, v in asdict(self).items() if k not in _NOT_EMBEDDED}
        doc["constants"] = self.resolved_constants().to_dict()
        return doc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(message)


def _env_default(name: str, conv, fallback):
    raw = os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))
    if raw is None:
        return fallback
    try:
        return conv(raw)
    except ValueError:
        raise CLIError(f"environment variable {ENV_PREFIX}{name.upper()} has invalid value {raw!r}") from None


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def build_parser() -> argparse.ArgumentParser:
    env = _env_default
    common = _Parser(add_help=False)
    common.add_argument("--k", type=int, default=env("k", int, 3))
    common.add_argument("--epsilon", type=float, default=env("epsilon", float, 0.25))
    common.add_argument("--p", type=float, default=env("p", float, 1.0))
    common.add_argument("--variant", choices=("exact", "fast"), default=env("variant", str, "exact"))
    common.add_argument("--seed", type=int, default=env("seed", int, 0))
    common.add_argument("--input", default=env("input", str, None))
    common.add_argument("--format", choices=FORMATS, default=env("format", str, "dense_csv"))
    common.add_argument("--output", default=env("output", str, None))
    common.add_argument("--queries", default=env("queries", str, None))
    common.add_argument("--suite", choices=SUITES, default=env("suite", str, "claims"))
    common.add_argument("--samples", type=int, default=env("samples", int, None))
    common.add_argument("--threads", type=int, default=env("threads", int, None),
                        help="worker threads; default is all available cores")
    common.add_argument("--constants", dest="constants_path", default=env("constants", str, None),
                        help="JSON file overriding tuning constants")
    common.add_argument("--encoding", choices=("binary", "text"), default=env("encoding", str, "binary"))
    common.add_argument("--no-validate", dest="validate", action="store_false",
                        default=env("validate", _bool, True))
    common.add_argument("--n", type=int, default=env("n", int, 2000))
    common.add_argument("--d", type=int, default=env("d", int, 500))
    common.add_argument("--ell", type=int, default=env("ell", int, 5))

    parser = _Parser(prog="strongcoreset", description="Strong coresets for k-median and l_p subspace approximation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "reduce": "emit the augmented matrix B = [A P_S, v]",
        "coreset-subspace": "build an l_p subspace coreset",
        "coreset-kmedian": "build a k-median coreset",
        "eval": "evaluate a coreset on a JSON query file",
        "verify": "run a verification suite",
        "counterexample": "run the Gaussian single-constant counterexample",
        "bench": "print a timing table",
        "replay": "rebuild an artifact from its embedded configuration",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def parse_config(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(ns).items()})
    if cfg.constants_path:
        try:
            cfg.constants = Constants.from_json(cfg.constants_path).to_dict()
        except (OSError, ValueError, TypeError) as exc:
            raise CLIError(f"cannot load constants: {exc}") from None
    cfg.validate_ranges()
    return cfg


# commands -----------------------------------------------------------------


def _load_input(cfg: RunConfig):
    if not cfg.input:
        raise CLIError(f"{cfg.command} requires --input")
    return ingest(cfg.input, cfg.format)


def _emit_artifact(cfg: RunConfig, obj) -> bytes:
    c = to_container(obj, cfg.embedded())
    data = c.to_bytes(cfg.encoding)
    if cfg.output:
        Path(cfg.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
    return data


def _emit_report(cfg: RunConfig, result) -> dict:
    doc = {"schema": REPORT_SCHEMA, "command": cfg.command, "config": cfg.embedded(), "result": result}
    text = json.dumps(json.loads(dump_json(doc)), indent=2, sort_keys=True) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return doc


def cmd_reduce(cfg: RunConfig):
    A = _load_input(cfg)
    consts = cfg.resolved_constants()
    if cfg.variant == "exact":
        aug, rep = dim_reduce_exact(A, cfg.k, cfg.epsilon, cfg.p, cfg.seed, constants=consts)
    else:
        aug, rep = dim_reduce_sampled(A, cfg.k, cfg.epsilon, cfg.p, cfg.seed, threads=cfg.threads, constants=consts)
    c = to_container(aug, cfg.embedded())
    c.meta["reduction"] = rep.to_dict()
    data = c.to_bytes(cfg.encoding)
    if cfg.output:
        Path(cfg.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


def cmd_coreset_subspace(cfg: RunConfig):
    A = _load_input(cfg)
    C = build_subspace_coreset(
        A, cfg.k, cfg.epsilon, cfg.p, cfg.variant, cfg.seed,
        validate=cfg.validate, threads=cfg.threads, constants=cfg.resolved_constants(),
    )
    _emit_artifact(cfg, C)


def cmd_coreset_kmedian(cfg: RunConfig):
    A = _load_input(cfg)
    C = build_kmedian_coreset(A, cfg.k, cfg.epsilon, cfg.seed, threads=cfg.threads,
                              constants=cfg.resolved_constants())
    _emit_artifact(cfg, C)


def _load_queries(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read query file: {exc}") from None
    if not isinstance(doc, dict) or not ({"subspaces", "center_sets"} & doc.keys()):
        raise CLIError("query file must be an object with 'subspaces' and/or 'center_sets' lists")
    return doc


def cmd_eval(cfg: RunConfig):
    if not cfg.input or not cfg.queries:
        raise CLIError("eval requires --input (coreset container) and --queries (JSON)")
    obj = from_container(read_container(cfg.input))
    q = _load_queries(cfg.queries)
    out = {"type": type(obj).__name__, "costs": []}
    if hasattr(obj, "row_weights"):
        for basis in q.get("subspaces", []):
            V = orthonormalize(np.asarray(basis, dtype=float))
            out["costs"].append(eval_subspace_cost(obj, V))
    elif hasattr(obj, "weights"):
        for centers in q.get("center_sets", []):
            out["costs"].append(eval_kmedian_cost(obj, CenterSet(np.asarray(centers, dtype=float))))
    else:
        raise CLIError("eval expects a subspace or kmedian coreset container")
    _emit_report(cfg, out)


def cmd_verify(cfg: RunConfig):
    A = ingest(cfg.input, cfg.format) if cfg.input else None
    explicit = {"k": cfg.k, "eps": cfg.epsilon, "p": cfg.p} if A is not None else {}
    res = run_suite(cfg.suite, samples=cfg.samples, seed=cfg.seed, A=A, threads=cfg.threads,
                    constants=cfg.resolved_constants(), **explicit)
    _emit_report(cfg, {"suite": cfg.suite, **res})
    return 0 if res.get("passed", False) else 3


def cmd_counterexample(cfg: RunConfig):
    try:
        r = gaussian_counterexample(cfg.n, cfg.d, cfg.ell, cfg.seed)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    _emit_report(cfg, r.to_dict())


def cmd_bench(cfg: RunConfig):
    """Timing table on synthetic instances; timings are not reproducible by nature."""
    rows = []
    reps = cfg.samples or 1
    A = low_rank_plus_noise(500, 40, 3, 0.5, seed=cfg.seed)
    X = planted_clusters(400, 30, 3, seed=cfg.seed)
    consts = cfg.resolved_constants()
    jobs = [
        ("dim_reduce_exact n=500 d=40", lambda: dim_reduce_exact(A, 3, 0.25, 1.0, cfg.seed, constants=consts)),
        ("dim_reduce_sampled n=500 d=40", lambda: dim_reduce_sampled(A, 3, 0.25, 1.0, cfg.seed,
                                                                     threads=cfg.threads, constants=consts)),
        ("coreset-subspace n=500 d=40", lambda: build_subspace_coreset(A, 3, 0.25, 1.0, "exact", cfg.seed,
                                                                       validate=False, constants=consts)),
        ("coreset-kmedian n=400 d=30", lambda: build_kmedian_coreset(X, 3, 0.3, cfg.seed, threads=cfg.threads,
                                                                     constants=consts)),
    ]
    for name, fn in jobs:
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            fn()
            times.append(time.perf_counter() - t0)
        rows.append((name, min(times), float(np.median(times))))
    width = max(len(r[0]) for r in rows)
    lines = [f"{'task':<{width}}  {'min_s':>8}  {'median_s':>8}"]
    lines += [f"{n:<{width}}  {a:8.3f}  {b:8.3f}" for n, a, b in rows]
    text = "\n".join(lines) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_replay(cfg: RunConfig):
    if not cfg.input:
        raise CLIError("replay requires --input (artifact)")
    data = Path(cfg.input).read_bytes()
    if data.lstrip().startswith(b"{"):
        embedded = json.loads(data)["config"]
    else:
        embedded = Container.from_bytes(data).meta["config"]
    fields = {k: v for k, v in embedded.items() if k in RunConfig.__dataclass_fields__}
    replay = RunConfig(**fields)
    replay.output, replay.threads = cfg.output, cfg.threads
    if replay.command == "replay":
        raise CLIError("artifact was itself produced by replay")
    replay.validate_ranges()
    return HANDLERS[replay.command](replay)


HANDLERS = {
    "reduce": cmd_reduce,
    "coreset-subspace": cmd_coreset_subspace,
    "coreset-kmedian": cmd_coreset_kmedian,
    "eval": cmd_eval,
    "verify": cmd_verify,
    "counterexample": cmd_counterexample,
    "bench": cmd_bench,
    "replay": cmd_replay,
}


def _error_doc(exc: BaseException) -> str:
    doc = {"schema": ERROR_SCHEMA, "error": {"type": type(exc).__name__, "message": str(exc)}}
    line = getattr(exc, "line", None)
    if line is not None:
        doc["error"]["line"] = line
    return json.dumps(doc, sort_keys=True)


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        status = HANDLERS[cfg.command](cfg)
        return int(status or 0)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except CLIError as exc:
        sys.stderr.write(_error_doc(exc) + "\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error document
        sys.stderr.write(_error_doc(exc) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
