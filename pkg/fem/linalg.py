"""
Linear algebra: 2x2 symmetric matrix algebra (pointwise or on arrays of
quadrature values) and the sparse solve contract used by every assembled
system.

Sparse matrices are ``scipy.sparse.csr_matrix`` (duplicates summed on
finalization). Solves are checked against

    ||A x - b||_2 <= rtol * (||b||_2 + ||A||_inf ||x||_2)

and report the achieved residual when they miss it.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from mongeampere import settings
from mongeampere.exceptions import IndefiniteMatrixError, LinearSolveError

logger = logging.getLogger(__name__)


# ========== 2x2 SYMMETRIC ALGEBRA ==========
@dataclass(frozen=True)
class Sym2x2:
    """[[a11, a12], [a12, a22]]; entries may be floats or equally shaped arrays."""
    a11: object
    a12: object
    a22: object

    @classmethod
    def identity(cls) -> 'Sym2x2':
        return cls(1.0, 0.0, 1.0)

    @classmethod
    def from_matrix(cls, A) -> 'Sym2x2':
        A = np.asarray(A, dtype=float)
        return cls(A[..., 0, 0], 0.5 * (A[..., 0, 1] + A[..., 1, 0]), A[..., 1, 1])

    def matrix(self) -> np.ndarray:
        a11, a12, a22 = np.broadcast_arrays(self.a11, self.a12, self.a22)
        return np.stack([np.stack([a11, a12], axis=-1), np.stack([a12, a22], axis=-1)], axis=-2)

    @property
    def trace(self):
        return self.a11 + self.a22

    def __add__(self, other):
        return Sym2x2(self.a11 + other.a11, self.a12 + other.a12, self.a22 + other.a22)

    def __sub__(self, other):
        return Sym2x2(self.a11 - other.a11, self.a12 - other.a12, self.a22 - other.a22)

    def __mul__(self, alpha):
        return Sym2x2(alpha * self.a11, alpha * self.a12, alpha * self.a22)

    __rmul__ = __mul__

    def __truediv__(self, alpha):
        return Sym2x2(self.a11 / alpha, self.a12 / alpha, self.a22 / alpha)


def det2(A: Sym2x2):
    return A.a11 * A.a22 - A.a12 * A.a12


def cof2(A: Sym2x2) -> Sym2x2:
    """Cofactor matrix; linear in A in two dimensions."""
    return Sym2x2(A.a22, -A.a12, A.a11)


def frobenius(A: Sym2x2, B: Sym2x2):
    """A:B with the off-diagonal entry counted twice."""
    return A.a11 * B.a11 + 2.0 * A.a12 * B.a12 + A.a22 * B.a22


def eig2(A: Sym2x2):
    """Eigenvalues (lambda1, lambda2), lambda1 <= lambda2."""
    mean = 0.5 * (A.a11 + A.a22)
    radius = np.hypot(0.5 * (A.a11 - A.a22), A.a12)
    lam1, lam2 = mean - radius, mean + radius
    if np.ndim(lam1) == 0:
        return float(lam1), float(lam2)
    return lam1, lam2


# ========== SPARSE MATRICES ==========
def assemble_csr(rows, cols, values, shape) -> sp.csr_matrix:
    """Finalize COO triplets into CSR with duplicate entries summed."""
    A = sp.coo_matrix((np.ravel(values), (np.ravel(rows), np.ravel(cols))), shape=shape).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def is_symmetric(A, rtol: float = 1e-12) -> bool:
    diff = abs(A - A.T)
    scale = max(abs(A).max(), np.finfo(float).tiny)
    return diff.nnz == 0 or diff.max() <= rtol * scale


def export_matrix_market(A, path, comment: str = ''):
    """Write ``A`` in Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(A), comment=comment)


# ========== SOLVES ==========
def _residual(A, x, b):
    r = float(np.linalg.norm(A @ x - b))
    bound = float(np.linalg.norm(b)) + spla.norm(A, np.inf) * float(np.linalg.norm(x))
    return r, bound


class Factorization:
    """Sparse LU factorization reused across right-hand sides, with residual-checked solves."""

    def __init__(self, A, spd: bool = False, rtol: float | None = None):
        self.A = sp.csc_matrix(A)
        self.shape = self.A.shape
        self.spd = spd
        self.rtol = settings.SOLVE_RTOL if rtol is None else rtol
        if self.shape[0] != self.shape[1]:
            raise ValueError(f"matrix must be square, got {self.shape}")
        try:
            if spd:
                # symmetric ordering without row pivoting: diag(U) is the LDL^T pivot sequence
                self._lu = spla.splu(self.A, permc_spec='MMD_AT_PLUS_A', diag_pivot_thresh=0.0,
                                     options=dict(SymmetricMode=True))
            else:
                self._lu = spla.splu(self.A)
        except RuntimeError as exc:
            raise LinearSolveError(f"factorization failed: {exc}") from exc
        if spd:
            pivots = self._lu.U.diagonal()
            if np.any(pivots <= 0.0):
                raise IndefiniteMatrixError(
                    f"matrix is not positive definite ({int(np.sum(pivots <= 0))} non-positive pivots)",
                    residual=float(pivots.min()))

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        if b.shape[0] != self.shape[0]:
            raise ValueError(f"right-hand side has length {b.shape[0]}, matrix is {self.shape}")
        x = self._lu.solve(b)
        r, bound = _residual(self.A, x, b)
        if r > self.rtol * bound:
            # one step of iterative refinement before giving up
            x = x + self._lu.solve(b - self.A @ x)
            r, bound = _residual(self.A, x, b)
        if not np.all(np.isfinite(x)) or r > self.rtol * bound:
            raise LinearSolveError("direct solve missed the residual tolerance", residual=r)
        return x


def factorize_spd(A) -> Factorization:
    return Factorization(A, spd=True)


def solve_spd(A, b, method: str = 'direct', rtol: float | None = None) -> np.ndarray:
    """Solve an SPD system by sparse factorization (default) or Jacobi-preconditioned CG."""
    if method == 'direct':
        return Factorization(A, spd=True, rtol=rtol).solve(b)
    if method == 'cg':
        return conjugate_gradient(A, b, rtol=rtol)
    raise ValueError(f"unknown SPD solve method {method!r}")


def solve_symmetric(A, b, rtol: float | None = None) -> np.ndarray:
    """Symmetric, possibly indefinite, system via pivoted sparse LU."""
    if not is_symmetric(A):
        raise ValueError("solve_symmetric needs a symmetric matrix")
    return Factorization(A, rtol=rtol).solve(b)


def solve_general(A, b, rtol: float | None = None) -> np.ndarray:
    return Factorization(A, rtol=rtol).solve(b)


def conjugate_gradient(A, b, x0=None, rtol: float | None = None, max_iter: int | None = None) -> np.ndarray:
    """
    Conjugate gradients with diagonal preconditioning.

    Stops at ||r|| <= rtol ||b||; non-positive curvature p^T A p <= 0 means
    the matrix is indefinite and is reported as such.
    """
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    rtol = settings.SOLVE_RTOL if rtol is None else rtol
    max_iter = settings.CG_MAX_ITER_FACTOR * n if max_iter is None else max_iter
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise IndefiniteMatrixError("non-positive diagonal entry", residual=float(diag.min()))
    inv_diag = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    target = rtol * np.linalg.norm(b)
    if np.linalg.norm(r) <= target:
        return x
    for k in range(max_iter):
        Ap = A @ p
        curvature = p @ Ap
        if curvature <= 0.0:
            raise IndefiniteMatrixError("CG met non-positive curvature", residual=float(np.linalg.norm(r)))
        alpha = rz / curvature
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r)
        if res <= target:
            logger.debug("CG converged in %d iterations (residual %.3e)", k + 1, res)
            return x
        z = inv_diag * r
        rz_next = r @ z
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise LinearSolveError(f"CG did not converge in {max_iter} iterations",
                           residual=float(np.linalg.norm(b - A @ x)))
