"""Linear system assembly: linear FEM for Poisson, central differences for Helmholtz.

Homogeneous Dirichlet nodes are eliminated; rows follow ``grid.interior``.
"""

import numpy as np

from hints_solver.core.errors import DimensionMismatch, DomainMismatch
from hints_solver.core.models import (
    Equation,
    FieldSample,
    FloatArray,
    GridKind,
    IntArray,
    LinearSystem,
    ProblemSpec,
)
from hints_solver.infrastructure.discretization.grids import build_grid, nodal_areas
from hints_solver.infrastructure.discretization.interpolation import resample_problem
from hints_solver.infrastructure.linalg.sparse import from_triplets


def _on_subdivisions(problem: ProblemSpec, n: int | None) -> ProblemSpec:
    if n is None or problem.grid.subdivisions[0] == n:
        return problem
    return resample_problem(problem, build_grid(problem.grid.kind, n))


def _positions(n_nodes: int, interior: IntArray) -> IntArray:
    """Node index -> equation row, -1 on the boundary."""
    position = np.full(n_nodes, -1, dtype=np.int64)
    position[interior] = np.arange(interior.shape[0])
    return position


def assemble_poisson_1d(problem: ProblemSpec, n: int | None = None) -> LinearSystem:
    """Linear elements with midpoint k and trapezoid load.

    The 1/h load factor is folded into A, so the right-hand side equals f at the
    interior nodes: ``A = (1/h^2) tridiag(-k_{e-1}, k_{e-1} + k_e, -k_e)``.
    """
    if problem.equation is not Equation.POISSON:
        raise ValueError(f"Expected a Poisson problem, got {problem.equation}")
    problem = _on_subdivisions(problem, n)
    grid = problem.grid
    if grid.kind is not GridKind.UNIFORM_INTERVAL:
        raise DomainMismatch(f"1D Poisson assembly needs a uniform interval, got {grid.kind}")

    m = grid.subdivisions[0]
    inv_h2 = float(m * m)
    k = problem.k_field.values
    k_elem = 0.5 * (k[:-1] + k[1:])

    rows = np.arange(m - 1)
    diag = (k_elem[:-1] + k_elem[1:]) * inv_h2
    off = -k_elem[1:-1] * inv_h2
    matrix = from_triplets(
        np.concatenate([rows, rows[:-1], rows[1:]]),
        np.concatenate([rows, rows[1:], rows[:-1]]),
        np.concatenate([diag, off, off]),
        (m - 1, m - 1),
    )
    return LinearSystem(matrix, problem.f_field.values[1:m].copy(), problem)


def assemble_helmholtz_fd(problem: ProblemSpec, n: int | None = None) -> LinearSystem:
    """Central-difference Laplacian plus k^2 on the diagonal, 3-point (1D) or 5-point (2D)."""
    if problem.equation is not Equation.HELMHOLTZ:
        raise ValueError(f"Expected a Helmholtz problem, got {problem.equation}")
    problem = _on_subdivisions(problem, n)
    grid = problem.grid
    if grid.kind not in (GridKind.UNIFORM_INTERVAL, GridKind.UNIFORM_SQUARE):
        raise DomainMismatch(f"Finite differences need a uniform grid, got {grid.kind}")

    m = grid.subdivisions[0]
    inv_h2 = float(m * m)
    interior = grid.interior
    position = _positions(grid.n_nodes, interior)
    k = problem.k_field.values[interior]

    strides = [1] if grid.dimension == 1 else [1, m + 1]
    diag = -2.0 * len(strides) * inv_h2 + k * k

    rows = [np.arange(interior.shape[0])]
    cols = [rows[0]]
    vals = [diag]
    for stride in strides:
        for neighbour in (interior - stride, interior + stride):
            col = position[neighbour]
            inside = col >= 0
            rows.append(rows[0][inside])
            cols.append(col[inside])
            vals.append(np.full(int(inside.sum()), inv_h2))

    size = interior.shape[0]
    matrix = from_triplets(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), (size, size)
    )
    return LinearSystem(matrix, problem.f_field.values[interior].copy(), problem)


def _element_stiffness(nodes: FloatArray, triangles: IntArray) -> tuple[FloatArray, FloatArray]:
    """Unit-coefficient P1 stiffness blocks (T, 3, 3) and triangle areas."""
    x = nodes[triangles, 0]
    y = nodes[triangles, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * np.abs(b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    blocks = np.einsum("ti,tj->tij", b, b) + np.einsum("ti,tj->tij", c, c)
    blocks /= (4.0 * area)[:, None, None]
    return blocks, area


def assemble_poisson_2d_fem(problem: ProblemSpec, resolution: int | None = None) -> LinearSystem:
    """Linear triangles with centroid k and one-point load ``f_T |T| / 3`` per vertex."""
    if problem.equation is not Equation.POISSON:
        raise ValueError(f"Expected a Poisson problem, got {problem.equation}")
    problem = _on_subdivisions(problem, resolution)
    grid = problem.grid
    if not grid.kind.is_triangulation:
        raise DomainMismatch(f"FEM assembly needs a triangulation, got {grid.kind}")
    assert grid.triangles is not None

    tris = grid.triangles
    blocks, area = _element_stiffness(grid.nodes, tris)
    k_tri = problem.k_field.values[tris].mean(axis=1)
    f_tri = problem.f_field.values[tris].mean(axis=1)
    blocks *= k_tri[:, None, None]

    interior = grid.interior
    position = _positions(grid.n_nodes, interior)
    pos = position[tris]

    row_pos = np.repeat(pos, 3, axis=1).ravel()
    col_pos = np.tile(pos, (1, 3)).ravel()
    values = blocks.reshape(-1)
    keep = (row_pos >= 0) & (col_pos >= 0)
    size = interior.shape[0]
    matrix = from_triplets(row_pos[keep], col_pos[keep], values[keep], (size, size))

    rhs = np.zeros(size)
    load = np.repeat((f_tri * area / 3.0)[:, None], 3, axis=1).ravel()
    flat = pos.ravel()
    inside = flat >= 0
    np.add.at(rhs, flat[inside], load[inside])
    return LinearSystem(matrix, rhs, problem)


def revert_residual(r: FloatArray, system: LinearSystem) -> FieldSample:
    """Maps an algebraic residual back to nodal function values, zero on the boundary.

    Uniform grids place r directly; on triangulations node i gets ``3 r_i / sum |T|``
    over the triangles that touch it.
    """
    residual = np.asarray(r, dtype=np.float64)
    if residual.shape != (system.size,):
        raise DimensionMismatch(
            f"Residual of shape {residual.shape} for a system of size {system.size}"
        )
    grid = system.grid
    values = np.zeros(grid.n_nodes)
    if grid.kind.is_triangulation:
        values[system.interior] = 3.0 * residual / nodal_areas(grid)[system.interior]
    else:
        values[system.interior] = residual
    return FieldSample(grid, values)

