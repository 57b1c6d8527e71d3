"""Reading and writing point sets in the two supported text formats.

``dense_csv``
    one point per line, comma-separated decimals.
``sparse_triplets``
    a header line ``n d nnz`` followed by ``nnz`` lines ``row col value``
    with 0-based indices; repeated positions are summed.

Parsing uses ``float``, which always expects a period decimal separator.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .linalg_core import PointMatrix

FORMATS = ("dense_csv", "sparse_triplets")


class IngestError(ValueError):
    """Malformed input; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path}:" if path else ""
        where += f"{line}: " if line is not None else (" " if path else "")
        super().__init__(f"{where}{message}")


def _number(tok: str, lineno: int, path) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise IngestError(f"cannot parse {tok.strip()!r} as a number", lineno, path) from None
    if not math.isfinite(x):
        raise IngestError(f"non-finite value {tok.strip()!r}", lineno, path)
    return x


def _index(tok: str, bound: int, what: str, lineno: int, path) -> int:
    try:
        i = int(tok)
    except ValueError:
        raise IngestError(f"{what} index {tok!r} is not an integer", lineno, path) from None
    if not 0 <= i < bound:
        raise IngestError(f"{what} index {i} outside [0, {bound})", lineno, path)
    return i


def read_dense_csv(path) -> PointMatrix:
    rows, d = [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            vals = [_number(t, lineno, str(path)) for t in line.split(",")]
            if d is None:
                d = len(vals)
            elif len(vals) != d:
                raise IngestError(f"expected {d} values, found {len(vals)}", lineno, str(path))
            rows.append(vals)
    if not rows:
        raise IngestError("no points found", None, str(path))
    return PointMatrix(np.array(rows, dtype=float))


def read_sparse_triplets(path) -> PointMatrix:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = [(i, ln) for i, ln in enumerate(lines, 1) if ln.strip()]
    if not body:
        raise IngestError("missing header line 'n d nnz'", 1, str(path))
    hline, header = body[0]
    parts = header.split()
    if len(parts) != 3:
        raise IngestError("header must be 'n d nnz'", hline, str(path))
    try:
        n, d, nnz = (int(t) for t in parts)
    except ValueError:
        raise IngestError("header entries must be integers", hline, str(path)) from None
    if n < 1 or d < 1 or nnz < 0:
        raise IngestError("header requires n >= 1, d >= 1, nnz >= 0", hline, str(path))
    entries = body[1:]
    if len(entries) != nnz:
        last = entries[-1][0] if entries else hline
        raise IngestError(f"header declares {nnz} entries, found {len(entries)}", last, str(path))
    r = np.empty(nnz, dtype=np.int64)
    c = np.empty(nnz, dtype=np.int64)
    v = np.empty(nnz, dtype=float)
    for j, (lineno, ln) in enumerate(entries):
        toks = ln.split()
        if len(toks) != 3:
            raise IngestError("expected 'row col value'", lineno, str(path))
        r[j] = _index(toks[0], n, "row", lineno, str(path))
        c[j] = _index(toks[1], d, "column", lineno, str(path))
        v[j] = _number(toks[2], lineno, str(path))
    return PointMatrix.from_triplets(n, d, r, c, v)


def ingest(path, format: str = "dense_csv") -> PointMatrix:
    """Load a point set from ``path`` in one of :data:`FORMATS`."""
    if format not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {format!r}")
    if not Path(path).is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return read_dense_csv(path) if format == "dense_csv" else read_sparse_triplets(path)


def write_dense_csv(path, A) -> None:
    X = A.to_dense() if isinstance(A, PointMatrix) else np.asarray(A, dtype=float)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in X:
            fh.write(",".join("%.17g" % x for x in row) + "\n")


def write_sparse_triplets(path, A) -> None:
    M = A if isinstance(A, PointMatrix) else PointMatrix(A)
    coo = M.csr.tocoo()
    r, c, v = coo.row, coo.col, coo.data
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{M.n} {M.d} {len(v)}\n")
        for i, j, x in zip(r, c, v):
            fh.write("%d %d %.17g\n" % (i, j, x))
