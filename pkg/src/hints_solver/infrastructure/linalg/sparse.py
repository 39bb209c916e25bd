"""Compressed-row construction helpers and the sparse matrix-vector product."""

import numpy as np
from numpy.typing import ArrayLike

from hints_solver.core.errors import DimensionMismatch
from hints_solver.core.models import FloatArray, SparseMatrix


def from_triplets(
    rows: ArrayLike, cols: ArrayLike, values: ArrayLike, shape: tuple[int, int]
) -> SparseMatrix:
    """Builds CSR storage from COO triplets, summing duplicates and dropping exact zeros."""
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    v = np.asarray(values, dtype=np.float64)
    if not (r.shape == c.shape == v.shape):
        raise DimensionMismatch("Triplet arrays must have equal length")

    n_rows, n_cols = shape
    order = np.lexsort((c, r))
    r, c, v = r[order], c[order], v[order]

    if r.size:
        # collapse duplicate (row, col) pairs, summing in input order
        new_entry = np.ones(r.shape[0], dtype=bool)
        new_entry[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
        group = np.cumsum(new_entry) - 1
        summed = np.zeros(int(group[-1]) + 1)
        np.add.at(summed, group, v)
        r, c, v = r[new_entry], c[new_entry], summed
        keep = v != 0.0
        r, c, v = r[keep], c[keep], v[keep]

    offsets = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=n_rows), out=offsets[1:])
    return SparseMatrix(rows=n_rows, cols=n_cols, offsets=offsets, indices=c, values=v)


def from_dense(dense: ArrayLike) -> SparseMatrix:
    a = np.asarray(dense, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"Expected a 2D array, got shape {a.shape}")
    r, c = np.nonzero(a)
    return from_triplets(r, c, a[r, c], a.shape)


def identity(n: int) -> SparseMatrix:
    idx = np.arange(n)
    return from_triplets(idx, idx, np.ones(n), (n, n))


def spmv(a: SparseMatrix, x: ArrayLike) -> FloatArray:
    """Computes ``A @ x``; products are accumulated row by row in storage order."""
    vec = np.asarray(x, dtype=np.float64)
    if vec.shape != (a.cols,):
        raise DimensionMismatch(f"Cannot multiply {a.shape} matrix by vector of shape {vec.shape}")
    if a.nnz == 0:
        return np.zeros(a.rows)
    return np.bincount(a.row_ids, weights=a.values * vec[a.indices], minlength=a.rows)


def is_symmetric(a: SparseMatrix, rtol: float = 1e-12) -> bool:
    if a.rows != a.cols:
        return False
    dense = a.to_dense()
    scale = max(float(np.abs(dense).max(initial=0.0)), np.finfo(float).tiny)
    return bool(np.abs(dense - dense.T).max(initial=0.0) <= rtol * scale)
