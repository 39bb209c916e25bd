"""Dense kernels: LU with partial pivoting, cyclic Jacobi eigensolver, vector norms."""

from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike

from hints_solver.core.errors import (
    DimensionMismatch,
    NoConvergence,
    NonFiniteValue,
    NotSymmetric,
    SingularMatrix,
)
from hints_solver.core.models import EigenDecomposition, FloatArray, IntArray

PIVOT_RTOL = 1e-14
SYMMETRY_RTOL = 1e-12
OFFDIAG_RTOL = 1e-12
MAX_SWEEPS = 100
MAX_EIG_SIZE = 4096


class LuFactors(NamedTuple):
    """Packed unit-lower / upper factors of ``P A`` plus the row permutation."""

    lu: FloatArray
    perm: IntArray


def _as_square(a: ArrayLike) -> FloatArray:
    mat = np.array(a, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch(f"Expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise NonFiniteValue("Matrix contains NaN or Inf entries")
    return mat


def lu_factor(a: ArrayLike) -> LuFactors:
    """Doolittle elimination with partial pivoting.

    A pivot whose magnitude is at most 1e-14 times the largest absolute row sum of A
    is treated as zero.
    """
    lu = _as_square(a)
    n = lu.shape[0]
    perm = np.arange(n)
    threshold = PIVOT_RTOL * float(np.abs(lu).sum(axis=1).max(initial=0.0))

    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) <= threshold or lu[p, k] == 0.0:
            raise SingularMatrix(f"Pivot {k} is {lu[p, k]:.3e} (threshold {threshold:.3e})")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1 :, k] /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= np.outer(lu[k + 1 :, k], lu[k, k + 1 :])
    return LuFactors(lu, perm)


def lu_substitute(factors: LuFactors, f: ArrayLike) -> FloatArray:
    lu, perm = factors
    rhs = np.asarray(f, dtype=np.float64)
    if rhs.shape != (lu.shape[0],):
        raise DimensionMismatch(f"Right-hand side of shape {rhs.shape} for {lu.shape} system")
    n = lu.shape[0]
    y = rhs[perm].copy()
    for i in range(1, n):
        y[i] -= lu[i, :i] @ y[:i]
    x = y
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1 :] @ x[i + 1 :]) / lu[i, i]
    return x


def lu_solve(a: ArrayLike, f: ArrayLike) -> FloatArray:
    """Solves the dense system ``A x = f``."""
    return lu_substitute(lu_factor(a), f)


def norms(x: ArrayLike) -> tuple[float, float]:
    """Returns the (2-norm, max-norm) pair."""
    v = np.asarray(x, dtype=np.float64)
    if v.size == 0:
        return 0.0, 0.0
    return float(np.linalg.norm(v)), float(np.abs(v).max())


def _round_robin_pairs(n: int) -> list[tuple[IntArray, IntArray]]:
    """Tournament schedule: n-1 rounds (n padded to even) of disjoint index pairs."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a < n and b < n]
        if pairs:
            p, q = zip(*pairs, strict=True)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def sign_changes(vectors: FloatArray, layout: IntArray | None = None) -> IntArray:
    """Zero-crossing count of each column, along the vector or along lattice rows and columns.

    Entries below 1e-10 of a column's largest magnitude are treated as zero and skipped.
    """
    n_vec = vectors.shape[1]
    counts = np.zeros(n_vec, dtype=np.int64)
    if layout is None:
        lines = [np.arange(vectors.shape[0])]
    else:
        lines = [row[row >= 0] for row in layout] + [col[col >= 0] for col in layout.T]

    scale = np.abs(vectors).max(axis=0)
    for j in range(n_vec):
        column = vectors[:, j]
        cutoff = 1e-10 * scale[j]
        for line in lines:
            values = column[line]
            values = values[np.abs(values) > cutoff]
            counts[j] += int(np.count_nonzero(np.signbit(values[1:]) != np.signbit(values[:-1])))
    return counts


def symmetric_eig(a: ArrayLike, layout: IntArray | None = None) -> EigenDecomposition:
    """Cyclic Jacobi rotations over a round-robin pair schedule.

    Each round applies n/2 rotations on disjoint index pairs at once; a sweep visits
    every pair exactly once. Iteration stops when the off-diagonal Frobenius norm is
    at most 1e-12 times ``‖A‖_F``.

    Args:
        a: Symmetric matrix (n ≤ 4096).
        layout: Optional 2D lattice of row positions (-1 where absent) used to count
            sign changes along grid rows and columns for 2D problems.
    """
    work = _as_square(a)
    n = work.shape[0]
    if n > MAX_EIG_SIZE:
        raise DimensionMismatch(f"Dense eigensolver limited to n <= {MAX_EIG_SIZE}, got {n}")

    fro = float(np.linalg.norm(work))
    if np.abs(work - work.T).max(initial=0.0) > SYMMETRY_RTOL * max(fro, np.finfo(float).tiny):
        raise NotSymmetric("Matrix is not symmetric within 1e-12 relative")
    work = 0.5 * (work + work.T)
    vectors = np.eye(n)

    threshold = OFFDIAG_RTOL * fro
    rounds = _round_robin_pairs(n)
    sweeps = 0
    while np.linalg.norm(work - np.diag(np.diag(work))) > threshold:
        if sweeps == MAX_SWEEPS:
            raise NoConvergence(f"Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps")
        for p, q in rounds:
            apq = work[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (work[q, q] - work[p, p]) / (2.0 * apq)
            t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c

            col_p, col_q = work[:, p].copy(), work[:, q].copy()
            work[:, p] = c * col_p - s * col_q
            work[:, q] = s * col_p + c * col_q
            row_p, row_q = work[p, :].copy(), work[q, :].copy()
            work[p, :] = c[:, None] * row_p - s[:, None] * row_q
            work[q, :] = s[:, None] * row_p + c[:, None] * row_q
            work[p, q] = 0.0
            work[q, p] = 0.0

            vec_p, vec_q = vectors[:, p].copy(), vectors[:, q].copy()
            vectors[:, p] = c * vec_p - s * vec_q
            vectors[:, q] = s * vec_p + c * vec_q
        sweeps += 1

    eigenvalues = np.diag(work).copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]

    # deterministic sign: largest-magnitude entry of each eigenvector is positive
    if n:
        peaks = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(n)]
        vectors = vectors * np.where(peaks < 0.0, -1.0, 1.0)

    crossings = sign_changes(vectors, layout)
    frequency_order = np.lexsort((np.abs(eigenvalues), crossings)).astype(np.int64)
    return EigenDecomposition(eigenvalues, vectors, frequency_order)
