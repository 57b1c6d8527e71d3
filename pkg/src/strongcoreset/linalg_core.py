"""Point storage, (p,2)-norms, orthonormal subspaces and distance primitives."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .config import DEFAULT

__all__ = [
    "PointMatrix",
    "Subspace",
    "CenterSet",
    "as_point_matrix",
    "norm_p2",
    "cost_p",
    "project",
    "dist_to_centers",
    "orthonormalize",
    "complement",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


class PointMatrix:
    """``n`` points in ``R^d`` stored densely or as compressed sparse rows.

    Sparse input arrives as triplets; it is kept in CSR form unless the
    density exceeds ``dense_density_threshold``, in which case it is
    densified.  Instances are read-only.
    """

    __slots__ = ("_dense", "_csr", "n", "d")

    def __init__(self, data, *, density_threshold: float = DEFAULT.dense_density_threshold):
        self._dense = None
        self._csr = None
        if sp.issparse(data):
            csr = sp.csr_matrix(data, dtype=float)
            csr.sum_duplicates()
            csr.eliminate_zeros()
            if not np.all(np.isfinite(csr.data)):
                raise ValueError("point matrix contains non-finite entries")
            self.n, self.d = csr.shape
            size = self.n * self.d
            if size and csr.nnz / size > density_threshold:
                self._dense = _readonly(csr.toarray())
            else:
                csr.data.setflags(write=False)
                self._csr = csr
        else:
            arr = np.asarray(data, dtype=float)
            if arr.ndim == 1:
                arr = arr[None, :]
            if arr.ndim != 2:
                raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError("point matrix contains non-finite entries")
            self.n, self.d = arr.shape
            self._dense = _readonly(arr)

    @classmethod
    def from_triplets(cls, n: int, d: int, rows, cols, values, **kw) -> "PointMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if rows.size and (rows.min() < 0 or rows.max() >= n):
            raise ValueError("row index out of range")
        if cols.size and (cols.min() < 0 or cols.max() >= d):
            raise ValueError("column index out of range")
        coo = sp.coo_matrix((values, (rows, cols)), shape=(n, d))
        return cls(coo, **kw)

    @property
    def is_sparse(self) -> bool:
        return self._csr is not None

    @property
    def nnz(self) -> int:
        if self._csr is not None:
            return int(self._csr.nnz)
        return int(np.count_nonzero(self._dense))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.d)

    @property
    def csr(self) -> sp.csr_matrix:
        if self._csr is None:
            return sp.csr_matrix(self._dense)
        return self._csr

    def to_dense(self) -> np.ndarray:
        if self._dense is not None:
            return self._dense
        return self._csr.toarray()

    def matmul(self, B: np.ndarray) -> np.ndarray:
        """``A @ B`` as a dense array; one pass over stored nonzeros when sparse."""
        if self._dense is not None:
            return self._dense @ B
        return np.asarray(self._csr @ B)

    def take_rows(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if self._dense is not None:
            return self._dense[idx]
        return self._csr[idx].toarray()

    def row_sq_norms(self) -> np.ndarray:
        if self._dense is not None:
            return np.einsum("ij,ij->i", self._dense, self._dense)
        sq = self._csr.multiply(self._csr)
        return np.asarray(sq.sum(axis=1)).ravel()

    def row_norms(self) -> np.ndarray:
        return np.sqrt(self.row_sq_norms())

    def scale(self) -> float:
        """Largest row norm; used as the absolute scale for tolerances."""
        if self.n == 0:
            return 0.0
        return float(np.sqrt(self.row_sq_norms().max()))

    def __repr__(self) -> str:
        kind = "sparse" if self.is_sparse else "dense"
        return f"PointMatrix(n={self.n}, d={self.d}, nnz={self.nnz}, {kind})"


def as_point_matrix(A) -> PointMatrix:
    return A if isinstance(A, PointMatrix) else PointMatrix(A)


@dataclass(frozen=True)
class Subspace:
    """Column-orthonormal basis ``U`` (d x ell) of a linear subspace."""

    basis: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.basis, dtype=float)
        if U.ndim != 2:
            raise ValueError("basis must be a d x ell matrix")
        if U.shape[1] > U.shape[0]:
            raise ValueError(f"subspace dimension {U.shape[1]} exceeds ambient {U.shape[0]}")
        gram = U.T @ U
        err = np.abs(gram - np.eye(U.shape[1])).max() if U.shape[1] else 0.0
        if err > 1e3 * DEFAULT.orthonormality_tol:
            raise ValueError(f"basis is not orthonormal (max |U'U - I| = {err:.2e})")
        object.__setattr__(self, "basis", _readonly(U))

    @property
    def d(self) -> int:
        return self.basis.shape[0]

    @property
    def ell(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def full(cls, d: int) -> "Subspace":
        return cls(np.eye(d))

    @classmethod
    def zero(cls, d: int) -> "Subspace":
        return cls(np.zeros((d, 0)))

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T


@dataclass(frozen=True)
class CenterSet:
    centers: np.ndarray = field()

    def __post_init__(self):
        C = np.asarray(self.centers, dtype=float)
        if C.ndim == 1:
            C = C[None, :]
        if C.ndim != 2 or C.shape[0] < 1:
            raise ValueError("center set must contain at least one center")
        if not np.all(np.isfinite(C)):
            raise ValueError("centers contain non-finite entries")
        object.__setattr__(self, "centers", _readonly(C))

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]


def _check_p(p: float) -> None:
    if not (p >= 1.0 and np.isfinite(p)):
        raise ValueError(f"p must be a finite real >= 1, got {p!r}")


def norm_p2(M, p: float) -> float:
    """``(sum_i ||M_i||_2^p)^(1/p)``."""
    _check_p(p)
    if isinstance(M, PointMatrix):
        M = M.csr if M.is_sparse else M.to_dense()
    if sp.issparse(M):
        M = sp.csr_matrix(M, dtype=float)
        big = abs(M).max() if M.nnz else 0.0
        if big == 0.0:
            return 0.0
        norms = np.sqrt(np.asarray((M / big).multiply(M / big).sum(axis=1)).ravel()) * big
    else:
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix contains non-finite entries")
        big = np.abs(M).max() if M.size else 0.0
        if big == 0.0:
            return 0.0
        # scale entries first so squaring cannot overflow
        norms = np.linalg.norm(M / big, axis=1) * big
    top = norms.max() if norms.size else 0.0
    if top == 0.0:
        return 0.0
    # factor out the largest norm so large p cannot overflow
    return float(top * np.sum((norms / top) ** p) ** (1.0 / p))


def residual_sq_norms(A: PointMatrix, S: Subspace) -> np.ndarray:
    """Squared distances ``||A_i - A_i U U^T||^2`` per row."""
    if A.d != S.d:
        raise ValueError(f"dimension mismatch: points in R^{A.d}, subspace in R^{S.d}")
    coeffs = A.matmul(S.basis)
    # subtraction form loses relative accuracy when rows sit almost inside S;
    # fall back to the explicit residual for those rows
    sq = A.row_sq_norms() - np.einsum("ij,ij->i", coeffs, coeffs)
    total = A.row_sq_norms()
    close = sq <= 1e-6 * total
    if np.any(close):
        idx = np.flatnonzero(close)
        rows = A.take_rows(idx)
        res = rows - coeffs[idx] @ S.basis.T
        sq[idx] = np.einsum("ij,ij->i", res, res)
    return np.maximum(sq, 0.0)


def cost_p(A, S: Subspace, p: float) -> float:
    """Sum of p-th powers of Euclidean distances from the rows of ``A`` to ``S``."""
    _check_p(p)
    A = as_point_matrix(A)
    sq = residual_sq_norms(A, S)
    return float(np.sum(sq ** (p / 2.0)))


def project(A, S: Subspace) -> tuple[np.ndarray, np.ndarray]:
    """Factored projection of the rows of ``A`` onto ``S``: ``(A U, U)``."""
    A = as_point_matrix(A)
    if A.d != S.d:
        raise ValueError(f"dimension mismatch: points in R^{A.d}, subspace in R^{S.d}")
    return A.matmul(S.basis), S.basis


def dist_to_centers(x, C: CenterSet) -> tuple[int, float]:
    """Nearest center index (lowest on ties) and its Euclidean distance."""
    if not isinstance(C, CenterSet):
        C = CenterSet(C)
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != C.d:
        raise ValueError(f"dimension mismatch: point in R^{x.shape[0]}, centers in R^{C.d}")
    d2 = np.einsum("ij,ij->i", C.centers - x, C.centers - x)
    j = int(np.argmin(d2))
    return j, float(np.sqrt(d2[j]))


def nearest_centers(X: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`dist_to_centers` over the rows of ``X``."""
    X = np.asarray(X, dtype=float)
    centers = np.asarray(centers, dtype=float)
    d2 = (
        np.einsum("ij,ij->i", X, X)[:, None]
        - 2.0 * X @ centers.T
        + np.einsum("ij,ij->i", centers, centers)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    idx = np.argmin(d2, axis=1)
    return idx, np.sqrt(d2[np.arange(X.shape[0]), idx])


def orthonormalize(V, rank_tol: float = DEFAULT.rank_tol, reference_norm: float | None = None) -> Subspace:
    """Orthonormal basis of the column space of ``V`` via pivoted QR.

    Columns whose pivot falls below ``rank_tol`` times the largest column
    norm (or ``reference_norm`` when given) are treated as dependent and
    dropped.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    d, m = V.shape
    if m == 0:
        return Subspace.zero(d)
    top = np.linalg.norm(V, axis=0).max() if reference_norm is None else reference_norm
    if top == 0.0:
        return Subspace.zero(d)
    Q, R, _ = scipy.linalg.qr(V, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rank_tol * top))
    if rank == 0:
        return Subspace.zero(d)
    # one re-orthogonalization pass keeps U'U = I at the 1e-15 level
    Q, _ = np.linalg.qr(Q[:, :rank])
    return Subspace(Q)


def complement(S: Subspace) -> Subspace:
    """Orthonormal basis of the orthogonal complement of ``S``."""
    if S.ell == 0:
        return Subspace.full(S.d)
    if S.ell == S.d:
        return Subspace.zero(S.d)
    Q, _ = np.linalg.qr(S.basis, mode="complete")
    return Subspace(Q[:, S.ell:])


def span_union(S: Subspace, W) -> Subspace:
    """Orthonormal basis of ``span(S, W)``; ``W`` may be a Subspace or a raw d x m block."""
    Wb = W.basis if isinstance(W, Subspace) else np.asarray(W, dtype=float)
    if Wb.ndim == 1:
        Wb = Wb[:, None]
    if S.ell == 0:
        return orthonormalize(Wb)
    if Wb.shape[1] == 0:
        return S
    ref = np.linalg.norm(Wb, axis=0).max()
    # project out S twice before ranking the new directions
    R = Wb - S.basis @ (S.basis.T @ Wb)
    R = R - S.basis @ (S.basis.T @ R)
    extra = orthonormalize(R, reference_norm=ref)
    if extra.ell == 0:
        return S
    Q, _ = np.linalg.qr(np.hstack([S.basis, extra.basis]))
    return Subspace(Q)
