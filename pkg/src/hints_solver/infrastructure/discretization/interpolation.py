"""Piecewise-linear transfer of fields between grids of the same domain."""

import numpy as np

from hints_solver.core.errors import DomainMismatch
from hints_solver.core.models import (
    Domain,
    FieldSample,
    FloatArray,
    Grid,
    GridKind,
    ProblemSpec,
)

_BARYCENTRIC_TOL = 1e-9
_CHUNK = 256


def _bilinear(src: FieldSample, points: FloatArray) -> FloatArray:
    n = src.grid.subdivisions[0]
    assert src.grid.lattice is not None
    table = src.values[src.grid.lattice]
    sx, sy = points[:, 0] * n, points[:, 1] * n
    i = np.clip(np.floor(sx).astype(np.int64), 0, n - 1)
    j = np.clip(np.floor(sy).astype(np.int64), 0, n - 1)
    tx, ty = sx - i, sy - j
    return (
        (1 - tx) * (1 - ty) * table[j, i]
        + tx * (1 - ty) * table[j, i + 1]
        + (1 - tx) * ty * table[j + 1, i]
        + tx * ty * table[j + 1, i + 1]
    )


def _barycentric(src: FieldSample, points: FloatArray) -> FloatArray:
    """Linear interpolation on the triangle that contains each point."""
    grid = src.grid
    assert grid.triangles is not None
    a, b, c = (grid.nodes[grid.triangles[:, k]] for k in range(3))
    e1, e2 = b - a, c - a
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]

    out = np.empty(points.shape[0])
    for start in range(0, points.shape[0], _CHUNK):
        chunk = points[start : start + _CHUNK]
        d = chunk[:, None, :] - a[None, :, :]
        l1 = (d[..., 0] * e2[None, :, 1] - d[..., 1] * e2[None, :, 0]) / det
        l2 = (e1[None, :, 0] * d[..., 1] - e1[None, :, 1] * d[..., 0]) / det
        l0 = 1.0 - l1 - l2
        worst = np.minimum(np.minimum(l0, l1), l2)
        best = np.argmax(worst, axis=1)
        rows = np.arange(chunk.shape[0])
        if np.any(worst[rows, best] < -_BARYCENTRIC_TOL):
            raise DomainMismatch("Destination node lies outside the source triangulation")
        tri = grid.triangles[best]
        out[start : start + _CHUNK] = (
            l0[rows, best] * src.values[tri[:, 0]]
            + l1[rows, best] * src.values[tri[:, 1]]
            + l2[rows, best] * src.values[tri[:, 2]]
        )
    return out


def interpolate_field(src: FieldSample, dst_grid: Grid) -> FieldSample:
    """Resamples ``src`` at the nodes of ``dst_grid``.

    1D grids use segment-linear interpolation, uniform squares bilinear cells and
    triangulations barycentric coordinates; all three are exact on affine functions.
    """
    src_grid = src.grid
    if src_grid.dimension != dst_grid.dimension:
        raise DomainMismatch(
            f"Cannot interpolate from a {src_grid.dimension}D grid to a {dst_grid.dimension}D grid"
        )
    if src_grid.domain is Domain.L_SHAPE and dst_grid.domain is not Domain.L_SHAPE:
        raise DomainMismatch("An L-shaped field does not cover the unit square")
    if src_grid.matches(dst_grid):
        return FieldSample(dst_grid, src.values.copy())

    points = dst_grid.nodes
    if src_grid.kind is GridKind.UNIFORM_INTERVAL:
        values = np.interp(points[:, 0], src_grid.nodes[:, 0], src.values)
    elif src_grid.kind is GridKind.UNIFORM_SQUARE:
        values = _bilinear(src, points)
    else:
        values = _barycentric(src, points)
    return FieldSample(dst_grid, values)


def resample_problem(problem: ProblemSpec, grid: Grid) -> ProblemSpec:
    if problem.grid.matches(grid):
        return problem
    return ProblemSpec(
        problem.equation,
        interpolate_field(problem.k_field, grid),
        interpolate_field(problem.f_field, grid),
    )
