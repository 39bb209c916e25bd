"""Stationary relaxation sweeps on CSR matrices and their dense amplification matrices."""

import numpy as np
from numpy.typing import ArrayLike

from hints_solver.core.errors import SingularMatrix, SingularSplitting, ZeroDiagonal
from hints_solver.core.models import FloatArray, Relaxation, SparseMatrix
from hints_solver.infrastructure.linalg.dense import lu_factor, lu_substitute
from hints_solver.infrastructure.linalg.sparse import spmv


def residual(a: SparseMatrix, f: FloatArray, v: FloatArray) -> FloatArray:
    return f - spmv(a, v)


def _checked_diagonal(a: SparseMatrix) -> FloatArray:
    diag = a.diagonal()
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise ZeroDiagonal(f"Zero diagonal entry in row {int(zero[0])}")
    return diag


def jacobi_step(a: SparseMatrix, f: ArrayLike, v: ArrayLike, omega: float) -> FloatArray:
    """Damped Jacobi: ``v + omega D^-1 (f - A v)``."""
    rhs = np.asarray(f, dtype=np.float64)
    x = np.asarray(v, dtype=np.float64)
    return x + omega * residual(a, rhs, x) / _checked_diagonal(a)


def gs_step(a: SparseMatrix, f: ArrayLike, v: ArrayLike) -> FloatArray:
    """One forward Gauss-Seidel sweep, rows in storage order."""
    diag = _checked_diagonal(a)
    rhs = np.asarray(f, dtype=np.float64)
    x = np.array(v, dtype=np.float64)
    offsets, indices, values = a.offsets, a.indices, a.values
    for i in range(a.rows):
        lo, hi = offsets[i], offsets[i + 1]
        x[i] += (rhs[i] - values[lo:hi] @ x[indices[lo:hi]]) / diag[i]
    return x


def relax(
    kind: Relaxation, a: SparseMatrix, f: FloatArray, v: FloatArray, omega: float
) -> FloatArray:
    if kind is Relaxation.GS:
        return gs_step(a, f, v)
    return jacobi_step(a, f, v, omega)


def amplification_matrix(a: SparseMatrix, omega: float, splitting: Relaxation) -> FloatArray:
    """Error propagator ``G = I - omega M^-1 A`` with M = D (Jacobi) or L + D (Gauss-Seidel)."""
    dense = a.to_dense()
    n = dense.shape[0]
    split = np.diag(np.diag(dense)) if splitting is Relaxation.JACOBI else np.tril(dense)
    try:
        factors = lu_factor(split)
    except SingularMatrix as e:
        raise SingularSplitting(f"{splitting} splitting matrix is singular") from e
    m_inv_a = np.column_stack([lu_substitute(factors, dense[:, j]) for j in range(n)])
    return np.eye(n) - omega * m_inv_a.reshape(n, n)
