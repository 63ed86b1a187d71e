"""Minimal numerical kernel: sparse direct solves and a dense symmetric
generalized eigensolver.

Every production solve is followed by an explicit residual check, so a
quietly deficient factorization surfaces as a diagnostic error instead of a
slightly wrong table entry.  Factorizations are immutable after
construction and safe to share across concurrent solves.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "DEFAULT_TOL",
    "NumericalError",
    "FactorizationError",
    "ResidualError",
    "SparseSymMatrix",
    "DenseSymMatrix",
    "SpdFactor",
    "SymIndefFactor",
    "solve_spd",
    "solve_sym_indefinite",
    "max_generalized_eig",
]

DEFAULT_TOL = 1e-10


class NumericalError(RuntimeError):
    """A numerical contract was violated (factorization, residual, compatibility)."""


class FactorizationError(NumericalError):
    """Factorization failed: singular or not definite as required."""


class ResidualError(NumericalError):
    """A computed solution failed its residual bound."""


class SparseSymMatrix:
    """Sparse symmetric matrix assembled from (row, col, value) triplets.

    Duplicate triplets are accumulated.  The assembled matrix must be
    exactly symmetric (element-level assembly emits both halves of each
    off-diagonal pair with identical values); anything else is rejected.
    """

    def __init__(self, n: int, rows, cols, values):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("sparse matrix entries must be finite")
        mat = sp.coo_matrix((values, (rows, cols)), shape=(n, n)).tocsr()
        mat.sum_duplicates()
        asym = mat - mat.T
        if asym.nnz and np.max(np.abs(asym.data)) != 0.0:
            raise ValueError("assembled matrix is not symmetric")
        self.n = n
        self.csr = mat

    @classmethod
    def from_csr(cls, mat: sp.csr_matrix) -> "SparseSymMatrix":
        mat = mat.tocoo()
        return cls(mat.shape[0], mat.row, mat.col, mat.data)

    @property
    def fro_norm(self) -> float:
        return float(np.sqrt((self.csr.data ** 2).sum()))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr @ x

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()


class DenseSymMatrix:
    """Dense symmetric matrix; only the lower triangle is stored."""

    def __init__(self, n: int, packed_lower: np.ndarray):
        self.n = n
        self._tri = np.asarray(packed_lower, dtype=float)
        if self._tri.shape != (n * (n + 1) // 2,):
            raise ValueError("packed lower triangle has wrong length")

    @classmethod
    def from_full(cls, mat: np.ndarray, rtol: float = 1e-12) -> "DenseSymMatrix":
        mat = np.asarray(mat, dtype=float)
        n = mat.shape[0]
        if mat.shape != (n, n):
            raise ValueError("matrix must be square")
        scale = np.max(np.abs(mat)) or 1.0
        if np.max(np.abs(mat - mat.T)) > rtol * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        return cls(n, mat[np.tril_indices(n)])

    def full(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        il = np.tril_indices(self.n)
        out[il] = self._tri
        out = out + out.T
        out[np.diag_indices(self.n)] /= 2.0
        return out

    @property
    def fro_norm(self) -> float:
        return float(np.linalg.norm(self.full()))


def _check_residual(op_norm: float, matvec, x: np.ndarray, rhs: np.ndarray,
                    tol: float, what: str) -> None:
    resid = float(np.linalg.norm(matvec(x) - rhs))
    bound = tol * (op_norm * float(np.linalg.norm(x)) + float(np.linalg.norm(rhs)))
    if resid > bound:
        raise ResidualError(
            f"{what}: residual {resid:.3e} exceeds bound {bound:.3e} (tol={tol:.1e})")


class SpdFactor:
    """Factor-once/solve-many interface for sparse SPD systems.

    Uses a symmetric-mode sparse LU with diagonal pivoting; for an SPD
    matrix this is a Cholesky-like factorization and the U diagonal equals
    the (positive) pivot sequence, so a nonpositive pivot flags an
    indefinite input.
    """

    def __init__(self, S: SparseSymMatrix, tol: float = DEFAULT_TOL):
        self.S = S
        self.tol = tol
        try:
            self._lu = spla.splu(
                S.csr.tocsc(),
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:
            raise FactorizationError(f"SPD factorization failed: {exc}") from exc
        pivots = self._lu.U.diagonal()
        if np.any(pivots <= 0):
            bad = int(np.argmin(pivots))
            raise FactorizationError(
                f"matrix is not positive definite: pivot {bad} = {pivots[bad]:.3e}")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        x = self._lu.solve(rhs)
        _check_residual(self.S.fro_norm, self.S.matvec, x, rhs, self.tol, "SPD solve")
        return x


class SymIndefFactor:
    """Factor-once/solve-many interface for sparse symmetric indefinite systems."""

    def __init__(self, S: SparseSymMatrix, tol: float = DEFAULT_TOL):
        self.S = S
        self.tol = tol
        try:
            self._lu = spla.splu(S.csr.tocsc())
        except RuntimeError as exc:
            raise FactorizationError(self._singular_message(str(exc))) from exc

    def _singular_message(self, detail: str) -> str:
        msg = f"symmetric indefinite factorization failed: {detail}"
        if self.S.n <= 4000:
            # cheap at desk scale, and only on the error path
            _, sigma, vt = np.linalg.svd(self.S.toarray())
            null = vt[-1]
            pivot = int(np.argmax(np.abs(null)))
            msg += (f"; smallest singular value {sigma[-1]:.3e}, "
                    f"null direction peaks at index {pivot}")
        return msg

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        x = self._lu.solve(rhs)
        if not np.all(np.isfinite(x)):
            raise FactorizationError(self._singular_message("non-finite solution"))
        _check_residual(self.S.fro_norm, self.S.matvec, x, rhs, self.tol,
                        "symmetric indefinite solve")
        return x


def solve_spd(S: SparseSymMatrix, rhs: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """One-shot SPD solve; see :class:`SpdFactor` for factor-once reuse."""
    return SpdFactor(S, tol=tol).solve(rhs)


def solve_sym_indefinite(S: SparseSymMatrix, rhs: np.ndarray,
                         tol: float = DEFAULT_TOL) -> np.ndarray:
    """One-shot symmetric indefinite solve."""
    return SymIndefFactor(S, tol=tol).solve(rhs)


def max_generalized_eig(A: DenseSymMatrix | np.ndarray, b_diag: np.ndarray,
                        tol: float = DEFAULT_TOL) -> tuple[float, np.ndarray]:
    """Largest eigenpair of A x = lambda B x with diagonal positive B.

    Returns (lambda_max, x) with x normalized to x^T B x = 1 and its
    largest-magnitude component positive.  The eigenvector residual bound
    ||A x - lambda B x|| <= tol * ||A||_F is checked on every call.
    """
    if isinstance(A, DenseSymMatrix):
        a = A.full()
    else:
        a = np.asarray(A, dtype=float)
        scale = np.max(np.abs(a)) or 1.0
        if np.max(np.abs(a - a.T)) > 1e-12 * scale:
            raise ValueError("A is not symmetric within tolerance")
        a = 0.5 * (a + a.T)
    b_diag = np.asarray(b_diag, dtype=float)
    if b_diag.shape != (a.shape[0],):
        raise ValueError("B diagonal has wrong length")
    if np.any(b_diag <= 0):
        bad = int(np.argmin(b_diag))
        raise ValueError(f"B must be positive: entry {bad} = {b_diag[bad]!r}")

    d = 1.0 / np.sqrt(b_diag)
    s = d[:, None] * a * d[None, :]
    s = 0.5 * (s + s.T)
    w, v = np.linalg.eigh(s)
    lam = float(w[-1])
    x = d * v[:, -1]
    x /= np.sqrt(float(x @ (b_diag * x)))
    if x[int(np.argmax(np.abs(x)))] < 0:
        x = -x
    a_fro = float(np.linalg.norm(a))
    resid = float(np.linalg.norm(a @ x - lam * (b_diag * x)))
    if resid > tol * a_fro:
        raise ResidualError(
            f"eigenpair residual {resid:.3e} exceeds {tol:.1e} * ||A||_F = {tol * a_fro:.3e}")
    return lam, x
