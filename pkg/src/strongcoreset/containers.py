"""Versioned containers for coresets and augmented matrices.

A container holds a type tag, a JSON metadata document and named float64
arrays.  Two encodings share the same logical content:

binary
    ``SCORESET-BIN\\n`` magic, little-endian length-prefixed fields, arrays
    as IEEE-754 binary64; round-trips bit-exactly.
text
    ``SCORESET-TXT`` magic line followed by newline-delimited records;
    arrays are written row by row with 17 significant digits, which also
    round-trips float64 exactly.

Metadata is serialized with sorted keys so equal content gives equal bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dimreduce import AugmentedMatrix
from .kmedian_coreset import WeightedCoreset
from .linalg_core import Subspace
from .subspace_coreset import SubspaceCoreset

VERSION = 1
TYPES = ("subspace", "kmedian", "augmented")
MAGIC_BIN = b"SCORESET-BIN\n"
MAGIC_TXT = b"SCORESET-TXT"
END_BIN = b"END\n"


class ContainerError(ValueError):
    pass


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def dump_json(obj) -> str:
    """Canonical JSON: sorted keys, compact separators, ASCII only."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_jsonable, allow_nan=False)


@dataclass
class Container:
    type: str
    meta: dict
    arrays: dict = field(default_factory=dict)
    version: int = VERSION

    def __post_init__(self):
        if self.type not in TYPES:
            raise ContainerError(f"unknown container type {self.type!r}")
        self.arrays = {k: np.ascontiguousarray(v, dtype="<f8") for k, v in self.arrays.items()}
        for name, a in self.arrays.items():
            if a.ndim not in (1, 2):
                raise ContainerError(f"array {name!r} must be 1-d or 2-d")

    # binary ------------------------------------------------------------
    def to_binary(self) -> bytes:
        out = [MAGIC_BIN, struct.pack("<I", self.version)]
        tag = self.type.encode()
        meta = dump_json(self.meta).encode()
        out += [struct.pack("<I", len(tag)), tag, struct.pack("<Q", len(meta)), meta]
        out.append(struct.pack("<I", len(self.arrays)))
        for name in sorted(self.arrays):
            a = self.arrays[name]
            nb = name.encode()
            out += [struct.pack("<I", len(nb)), nb, struct.pack("<I", a.ndim)]
            out += [struct.pack("<Q", s) for s in a.shape]
            out.append(a.tobytes(order="C"))
        out.append(END_BIN)
        return b"".join(out)

    @classmethod
    def from_binary(cls, data: bytes) -> "Container":
        pos = 0

        def take(nbytes):
            nonlocal pos
            if pos + nbytes > len(data):
                raise ContainerError("truncated container")
            chunk = data[pos : pos + nbytes]
            pos += nbytes
            return chunk

        def unpack(fmt):
            return struct.unpack(fmt, take(struct.calcsize(fmt)))[0]

        if take(len(MAGIC_BIN)) != MAGIC_BIN:
            raise ContainerError("not a binary coreset container")
        version = unpack("<I")
        if version != VERSION:
            raise ContainerError(f"unsupported container version {version} (expected {VERSION})")
        tag = take(unpack("<I")).decode()
        meta = json.loads(take(unpack("<Q")).decode())
        arrays = {}
        for _ in range(unpack("<I")):
            name = take(unpack("<I")).decode()
            ndim = unpack("<I")
            shape = tuple(unpack("<Q") for _ in range(ndim))
            count = int(np.prod(shape, dtype=np.int64))
            arrays[name] = np.frombuffer(take(8 * count), dtype="<f8").reshape(shape).copy()
        if take(len(END_BIN)) != END_BIN:
            raise ContainerError("missing end marker")
        if pos != len(data):
            raise ContainerError("trailing bytes after end marker")
        return cls(tag, meta, arrays, version)

    # text --------------------------------------------------------------
    def to_text(self) -> bytes:
        lines = [MAGIC_TXT.decode(), f"version {self.version}", f"type {self.type}"]
        lines.append("meta " + dump_json(self.meta))
        lines.append(f"arrays {len(self.arrays)}")
        for name in sorted(self.arrays):
            a = self.arrays[name]
            lines.append(f"array {name} {a.ndim} " + " ".join(str(s) for s in a.shape))
            rows = a.reshape(1, -1) if a.ndim == 1 else a
            if a.size:
                lines += [" ".join("%.17g" % x for x in row) for row in rows]
        lines.append("end")
        return ("\n".join(lines) + "\n").encode("ascii")

    @classmethod
    def from_text(cls, data: bytes) -> "Container":
        lines = data.decode("ascii").split("\n")
        it = iter(enumerate(lines, 1))

        def nxt(prefix=None):
            for lineno, ln in it:
                if prefix is not None and not ln.startswith(prefix):
                    raise ContainerError(f"line {lineno}: expected {prefix!r}")
                return lineno, ln
            raise ContainerError("truncated container")

        if nxt()[1] != MAGIC_TXT.decode():
            raise ContainerError("not a text coreset container")
        version = int(nxt("version ")[1].split()[1])
        if version != VERSION:
            raise ContainerError(f"unsupported container version {version} (expected {VERSION})")
        tag = nxt("type ")[1].split(maxsplit=1)[1]
        meta = json.loads(nxt("meta ")[1][5:])
        arrays = {}
        for _ in range(int(nxt("arrays ")[1].split()[1])):
            toks = nxt("array ")[1].split()
            name, ndim = toks[1], int(toks[2])
            shape = tuple(int(t) for t in toks[3 : 3 + ndim])
            count = int(np.prod(shape, dtype=np.int64))
            nrows = 0 if count == 0 else (1 if ndim == 1 else shape[0])
            vals = []
            for _ in range(nrows):
                lineno, ln = nxt()
                row = [float(t) for t in ln.split()]
                width = shape[0] if ndim == 1 else shape[1]
                if len(row) != width:
                    raise ContainerError(f"line {lineno}: expected {width} values, found {len(row)}")
                vals += row
            arrays[name] = np.array(vals, dtype=float).reshape(shape)
        if nxt()[1] != "end":
            raise ContainerError("missing end marker")
        return cls(tag, meta, arrays, version)

    def to_bytes(self, encoding: str = "binary") -> bytes:
        if encoding == "binary":
            return self.to_binary()
        if encoding == "text":
            return self.to_text()
        raise ValueError(f"encoding must be 'binary' or 'text', got {encoding!r}")

    @classmethod
    def from_bytes(cls, data: bytes) -> "Container":
        if data.startswith(MAGIC_BIN):
            return cls.from_binary(data)
        if data.startswith(MAGIC_TXT):
            return cls.from_text(data)
        raise ContainerError("unrecognized container magic")


def write_container(path, c: Container, encoding: str = "binary") -> bytes:
    data = c.to_bytes(encoding)
    Path(path).write_bytes(data)
    return data


def read_container(path) -> Container:
    return Container.from_bytes(Path(path).read_bytes())


# conversions -----------------------------------------------------------


def to_container(obj, config: dict | None = None) -> Container:
    """Wrap a coreset or augmented matrix; ``config`` is embedded for replay."""
    meta = {"config": config or {}}
    if isinstance(obj, SubspaceCoreset):
        meta.update(s=obj.s, d=obj.d, p=obj.p, k=obj.k, eps=obj.eps, build=obj.meta)
        return Container("subspace", meta, {"points": obj.points, "weights": obj.row_weights})
    if isinstance(obj, WeightedCoreset):
        meta.update(s=obj.s, d=obj.d, p=1.0, k=obj.k, eps=obj.epsilon, build=obj.meta)
        return Container("kmedian", meta, {"points": obj.points, "weights": obj.weights})
    if isinstance(obj, AugmentedMatrix):
        meta.update(n=obj.n, d=obj.d, ell=obj.ell, exact_tail=obj.exact_tail)
        arrays = {"coeffs": obj.coeffs, "basis": obj.basis.basis, "tail": obj.tail}
        return Container("augmented", meta, arrays)
    raise TypeError(f"cannot containerize {type(obj).__name__}")


def from_container(c: Container):
    m, a = c.meta, c.arrays
    if c.type == "subspace":
        return SubspaceCoreset(a["points"], a["weights"], m["p"], m["k"], m["eps"], m.get("build", {}))
    if c.type == "kmedian":
        return WeightedCoreset(a["points"], a["weights"], m["k"], m["eps"], m.get("build", {}))
    basis = a["basis"]
    return AugmentedMatrix(a["coeffs"], Subspace(basis), a["tail"], bool(m["exact_tail"]))
