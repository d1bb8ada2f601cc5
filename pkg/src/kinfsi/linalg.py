"""Sparse direct solves with symmetric Dirichlet elimination.

Matrices are ``scipy.sparse.csr_matrix``; factorization is SuperLU with a
COLAMD fill-reducing ordering.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class SolverAccuracyError(RuntimeError):
    pass


@dataclass
class LinearSystem:
    matrix: sp.spmatrix
    rhs: np.ndarray
    constraints: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix)
        self.matrix.sum_duplicates()
        self.matrix.sort_indices()
        self.rhs = np.asarray(self.rhs, float)
        n, m = self.matrix.shape
        if n != m or len(self.rhs) != n:
            raise ValueError(f"inconsistent system: matrix {self.matrix.shape}, rhs {self.rhs.shape}")


def _check_constraints(n: int, constraints: Mapping[int, float]):
    idx = np.array(sorted(constraints), dtype=np.int64)
    if len(idx) and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"constraint index out of range for system of size {n}")
    return idx, np.array([constraints[i] for i in idx.tolist()], float)


def _eliminate_matrix(A: sp.csr_matrix, idx: np.ndarray) -> sp.csr_matrix:
    n = A.shape[0]
    keep = np.ones(n, float)
    keep[idx] = 0.0
    D = sp.diags(keep)
    fixed = np.zeros(n)
    fixed[idx] = 1.0
    out = (D @ A @ D + sp.diags(fixed)).tocsr()
    out.eliminate_zeros()
    out.sort_indices()
    return out


def eliminate_constraints(system: LinearSystem) -> LinearSystem:
    """Replace constrained rows/columns by identity and lift the prescribed values."""
    A = system.matrix
    idx, vals = _check_constraints(A.shape[0], system.constraints)
    if len(idx) == 0:
        return LinearSystem(A.copy(), system.rhs.copy())
    g = np.zeros(A.shape[0])
    g[idx] = vals
    rhs = system.rhs - A @ g
    rhs[idx] = vals
    return LinearSystem(_eliminate_matrix(A, idx), rhs)


def _structural_check(A: sp.csr_matrix):
    empty_rows = np.flatnonzero(np.diff(A.indptr) == 0)
    if len(empty_rows):
        raise SingularMatrixError(f"structurally singular: row {empty_rows[0]} is empty", int(empty_rows[0]))
    empty_cols = np.flatnonzero(np.diff(A.tocsc().indptr) == 0)
    if len(empty_cols):
        raise SingularMatrixError(
            f"structurally singular: column {empty_cols[0]} is empty", int(empty_cols[0])
        )


def _dense_zero_pivot(A: sp.csr_matrix, max_n: int = 4000) -> int | None:
    # SuperLU does not always report where it broke down; a dense partial
    # pivoting pass locates the first vanishing pivot for moderate sizes
    n = A.shape[0]
    if n > max_n:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", la.LinAlgWarning)
        lu, piv = la.lu_factor(A.toarray(), check_finite=False)
    diag = np.abs(np.diag(lu))
    tiny = np.flatnonzero(diag <= 1e-14 * max(diag.max(), 1.0))
    if not len(tiny):
        return None
    perm = np.arange(n)
    for i, j in enumerate(piv):
        perm[[i, j]] = perm[[j, i]]
    return int(perm[tiny[0]])


class Factorization:
    """LU factorization of a constrained operator, reusable across right-hand sides.

    The constraint set and its prescribed values are fixed at construction;
    :meth:`solve` lifts them into every right-hand side.
    """

    def __init__(self, matrix: sp.spmatrix, constraints: Mapping[int, float] | None = None, tol: float = RESIDUAL_TOL):
        A = sp.csr_matrix(matrix)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"matrix must be square, got {A.shape}")
        self.n = n
        self.tol = tol
        self._idx, self._vals = _check_constraints(n, constraints or {})
        self._g = np.zeros(n)
        self._g[self._idx] = self._vals
        self._lift = A @ self._g if len(self._idx) else None
        self.matrix = _eliminate_matrix(A, self._idx) if len(self._idx) else A
        if n == 0:
            self._lu = None
            return
        _structural_check(self.matrix)
        try:
            self._lu = spla.splu(self.matrix.tocsc(), permc_spec="COLAMD")
        except RuntimeError as exc:
            m = re.search(r"(\d+)", str(exc))
            row = int(m.group(1)) - 1 if m else _dense_zero_pivot(self.matrix)
            raise SingularMatrixError(f"numerically singular matrix ({exc}); pivot row {row}", row) from exc
        diag = np.abs(self._lu.U.diagonal())
        scale = max(np.max(diag), 1.0) if len(diag) else 1.0
        tiny = np.flatnonzero(diag <= 1e-14 * scale)
        if len(tiny):
            row = int(self._lu.perm_r.argsort()[tiny[0]]) if tiny[0] < n else None
            raise SingularMatrixError(f"numerically singular matrix: zero pivot at row {row}", row)

    def lift(self, rhs: np.ndarray) -> np.ndarray:
        b = np.array(rhs, float)
        if len(self._idx):
            b -= self._lift
            b[self._idx] = self._vals
        return b

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = self.lift(rhs)
        if self.n == 0:
            return b
        bnorm = np.linalg.norm(b)
        if bnorm == 0.0:
            return np.zeros(self.n)
        x = self._lu.solve(b)
        r = b - self.matrix @ x
        rel = np.linalg.norm(r) / bnorm
        if rel > self.tol:
            x = x + self._lu.solve(r)
            rel = np.linalg.norm(b - self.matrix @ x) / bnorm
            if rel > self.tol:
                raise SolverAccuracyError(f"relative residual {rel:.3e} exceeds {self.tol:.1e}")
        self.last_residual = rel
        return x


def factor_and_solve(system: LinearSystem, tol: float = RESIDUAL_TOL) -> np.ndarray:
    return Factorization(system.matrix, system.constraints, tol=tol).solve(system.rhs)
