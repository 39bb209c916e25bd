"""Grid constructors for the interval, the unit square and the L-shaped domain."""

import numpy as np

from hints_solver.core.errors import SizeMismatch
from hints_solver.core.models import FloatArray, Grid, GridKind


def uniform_interval(n: int) -> Grid:
    """n uniform intervals on (0, 1): nodes x_i = i/n, i = 0..n."""
    if n < 2:
        raise SizeMismatch(f"An interval grid needs n >= 2, got {n}")
    nodes = (np.arange(n + 1, dtype=np.float64) / n)[:, None]
    boundary = np.zeros(n + 1, dtype=bool)
    boundary[[0, n]] = True
    return Grid(GridKind.UNIFORM_INTERVAL, (n,), nodes, boundary)


def uniform_square(n: int) -> Grid:
    """Cartesian (n+1)^2 lattice on the unit square, x varying fastest."""
    if n < 2:
        raise SizeMismatch(f"A square grid needs n >= 2, got {n}")
    j, i = np.divmod(np.arange((n + 1) ** 2), n + 1)
    nodes = np.column_stack([i / n, j / n]).astype(np.float64)
    boundary = (i == 0) | (i == n) | (j == 0) | (j == n)
    lattice = np.arange((n + 1) ** 2, dtype=np.int64).reshape(n + 1, n + 1)
    return Grid(GridKind.UNIFORM_SQUARE, (n, n), nodes, boundary, lattice=lattice)


def structured_triangulation(resolution: int, notch: bool = True) -> Grid:
    """Right-triangle mesh of the L-shape (0,1)^2 minus [0.5,1)^2, or of the full square.

    Every kept lattice cell is split along its (x0,y0)-(x1,y1) diagonal.
    """
    r = resolution
    if r < 4 or r % 2:
        raise SizeMismatch(f"Triangulation resolution must be even and >= 4, got {r}")
    half = r // 2

    j, i = np.divmod(np.arange((r + 1) ** 2), r + 1)
    in_notch = (i > half) & (j > half) if notch else np.zeros_like(i, dtype=bool)
    keep = ~in_notch

    lattice = np.full((r + 1) ** 2, -1, dtype=np.int64)
    lattice[keep] = np.arange(int(keep.sum()))
    lattice = lattice.reshape(r + 1, r + 1)

    ik, jk = i[keep], j[keep]
    nodes = np.column_stack([ik / r, jk / r]).astype(np.float64)
    boundary = (ik == 0) | (jk == 0) | (ik == r) | (jk == r)
    if notch:
        boundary |= (ik >= half) & (jk >= half)

    ci, cj = np.meshgrid(np.arange(r), np.arange(r))
    ci, cj = ci.ravel(), cj.ravel()
    if notch:
        cells = ~((ci >= half) & (cj >= half))
        ci, cj = ci[cells], cj[cells]
    p00 = lattice[cj, ci]
    p10 = lattice[cj, ci + 1]
    p11 = lattice[cj + 1, ci + 1]
    p01 = lattice[cj + 1, ci]
    triangles = np.concatenate(
        [np.column_stack([p00, p10, p11]), np.column_stack([p00, p11, p01])]
    ).astype(np.int64)

    kind = GridKind.L_SHAPED_TRIANGULATION if notch else GridKind.SQUARE_TRIANGULATION
    return Grid(kind, (r, r), nodes, boundary, triangles=triangles, lattice=lattice)


def l_shaped(resolution: int) -> Grid:
    return structured_triangulation(resolution, notch=True)


def build_grid(kind: GridKind | str, subdivisions: int | tuple[int, ...] | list[int]) -> Grid:
    """Rebuilds a grid from its (kind, subdivisions) description."""
    kind = GridKind(kind)
    n = subdivisions if isinstance(subdivisions, int) else int(subdivisions[0])
    if kind is GridKind.UNIFORM_INTERVAL:
        return uniform_interval(n)
    if kind is GridKind.UNIFORM_SQUARE:
        return uniform_square(n)
    return structured_triangulation(n, notch=kind is GridKind.L_SHAPED_TRIANGULATION)


def coarsen(grid: Grid) -> Grid:
    """Same grid family with half the subdivisions per axis."""
    n = grid.subdivisions[0]
    if n % 2:
        raise SizeMismatch(f"Cannot coarsen a grid with an odd subdivision count ({n})")
    return build_grid(grid.kind, n // 2)


def triangle_areas(grid: Grid) -> FloatArray:
    if grid.triangles is None:
        raise ValueError(f"{grid.kind} grid has no triangles")
    a, b, c = (grid.nodes[grid.triangles[:, k]] for k in range(3))
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    return 0.5 * np.abs(cross)


def nodal_areas(grid: Grid) -> FloatArray:
    """Sum of the areas of all triangles touching each node."""
    areas = triangle_areas(grid)
    total = np.zeros(grid.n_nodes)
    for k in range(3):
        np.add.at(total, grid.triangles[:, k], areas)  # type: ignore[index]
    return total
