"""Geometric multigrid: full-weighting transfers, rediscretized hierarchies, V-cycles."""

from math import isqrt

import numpy as np
from numpy.typing import ArrayLike

from hints_solver.core.errors import SizeMismatch
from hints_solver.core.models import FloatArray, Grid, IntArray, LinearSystem, Relaxation
from hints_solver.core.ports import IAssembler, ICorrectionOperator
from hints_solver.infrastructure.discretization.grids import coarsen
from hints_solver.infrastructure.discretization.interpolation import resample_problem
from hints_solver.infrastructure.linalg.dense import LuFactors, lu_factor, lu_substitute
from hints_solver.infrastructure.solvers.relaxation import relax, residual


def _restrict_axis(x: FloatArray, axis: int) -> FloatArray:
    m = x.shape[axis]
    if m < 3 or m % 2 == 0:
        raise SizeMismatch(f"Fine interior size {m} is not of the form 2m+1")
    x = np.moveaxis(x, axis, 0)
    out = 0.25 * x[0:-2:2] + 0.5 * x[1:-1:2] + 0.25 * x[2::2]
    return np.moveaxis(out, 0, axis)


def _prolong_axis(y: FloatArray, axis: int) -> FloatArray:
    y = np.moveaxis(y, axis, 0)
    m = y.shape[0]
    padded = np.concatenate([np.zeros_like(y[:1]), y, np.zeros_like(y[:1])])
    out = np.empty((2 * m + 1, *y.shape[1:]))
    out[1::2] = y
    out[0::2] = 0.5 * (padded[:-1] + padded[1:])
    return np.moveaxis(out, 0, axis)


def _as_box(v: FloatArray, dimension: int) -> FloatArray:
    if dimension == 1:
        return v
    side = isqrt(v.shape[0])
    if side * side != v.shape[0]:
        raise SizeMismatch(f"A 2D interior vector needs a square size, got {v.shape[0]}")
    return v.reshape(side, side)


def restrict(v_fine: ArrayLike, dimension: int = 1) -> FloatArray:
    """Full weighting (1/4, 1/2, 1/4) per axis; coarse node c sits at fine node 2c+1."""
    box = _as_box(np.asarray(v_fine, dtype=np.float64), dimension)
    for axis in range(dimension):
        box = _restrict_axis(box, axis)
    return box.ravel()


def prolong(v_coarse: ArrayLike, dimension: int = 1) -> FloatArray:
    """Linear interpolation, twice the transpose of ``restrict`` per axis."""
    box = _as_box(np.asarray(v_coarse, dtype=np.float64), dimension)
    for axis in range(dimension):
        box = _prolong_axis(box, axis)
    return box.ravel()


class GridTransfer:
    """Restriction and prolongation between the interiors of two nested grids.

    Vectors are scattered onto the lattice of interior nodes (zero elsewhere, which
    covers the L-shape notch), transferred axis by axis, and gathered back. Triangulated
    FEM systems carry an h^2 load factor, so their residuals are restricted with the
    transpose of prolongation instead of the averaging weights.
    """

    def __init__(self, fine: Grid, coarse: Grid) -> None:
        self.fine = fine
        self.coarse = coarse
        self.dimension = fine.dimension
        self._fine_box = self._box_positions(fine)
        self._coarse_box = self._box_positions(coarse)
        self.residual_scale = 2.0**self.dimension if fine.kind.is_triangulation else 1.0

    @staticmethod
    def _box_positions(grid: Grid) -> IntArray | None:
        layout = grid.interior_layout()
        if layout is None:
            return None
        return layout[1:-1, 1:-1]

    def _scatter(self, v: FloatArray, box: IntArray | None) -> FloatArray:
        if box is None:
            return v
        out = np.zeros(box.shape)
        inside = box >= 0
        out[inside] = v[box[inside]]
        return out

    def _gather(self, values: FloatArray, box: IntArray | None, size: int) -> FloatArray:
        if box is None:
            return values
        out = np.empty(size)
        inside = box >= 0
        out[box[inside]] = values[inside]
        return out

    def restrict(self, v: FloatArray) -> FloatArray:
        values = self._scatter(v, self._fine_box)
        for axis in range(self.dimension):
            values = _restrict_axis(values, axis)
        n_coarse = self.coarse.interior.shape[0]
        return self.residual_scale * self._gather(values, self._coarse_box, n_coarse)

    def prolong(self, v: FloatArray) -> FloatArray:
        values = self._scatter(v, self._coarse_box)
        for axis in range(self.dimension):
            values = _prolong_axis(values, axis)
        return self._gather(values, self._fine_box, self.fine.interior.shape[0])


def build_hierarchy(
    system: LinearSystem, levels: int, assembler: IAssembler
) -> list[LinearSystem]:
    """Finest-first list of systems, each coarser one rediscretized from interpolated k."""
    systems = [system]
    for _ in range(levels - 1):
        grid = coarsen(systems[-1].grid)
        coarse_problem = resample_problem(systems[-1].problem, grid)
        systems.append(assembler(coarse_problem))
    return systems


class VCycle:
    """Recursive V-cycle over a fixed hierarchy.

    Each level runs a block of ``n_rl`` relaxation steps before and after the coarse
    correction. With a corrector and ``n_r`` set, step s of a block (1-based) is a
    correction step whenever s is a multiple of ``n_r``. In hierarchies of two or more
    levels, a coarsest system of dimension at most ``coarse_direct_max`` is solved by LU.
    """

    def __init__(
        self,
        systems: list[LinearSystem],
        relaxation: Relaxation,
        omega: float,
        n_rl: int,
        coarse_direct_max: int = 32,
        corrector: ICorrectionOperator | None = None,
        n_r: int | None = None,
        correct_on_coarsest: bool = True,
    ) -> None:
        self.systems = systems
        self.relaxation = relaxation
        self.omega = omega
        self.n_rl = n_rl
        self.corrector = corrector
        self.n_r = n_r
        self.correct_on_coarsest = correct_on_coarsest
        self.transfers = [
            GridTransfer(fine.grid, coarse.grid)
            for fine, coarse in zip(systems[:-1], systems[1:], strict=True)
        ]
        self.sweeps = 0
        self.corrections = 0

        self._coarse_lu: LuFactors | None = None
        coarsest = systems[-1]
        if len(systems) >= 2 and coarsest.size <= coarse_direct_max:
            self._coarse_lu = lu_factor(coarsest.matrix.to_dense())

    @property
    def levels(self) -> int:
        return len(self.systems)

    def _block(self, level: int, f: FloatArray, v: FloatArray) -> FloatArray:
        system = self.systems[level]
        corrector, period = self.corrector, self.n_r
        if period is None or not (self.correct_on_coarsest or level < self.levels - 1):
            corrector = None
        for step in range(1, self.n_rl + 1):
            if corrector is not None and period is not None and step % period == 0:
                v = v + corrector.correct(system, residual(system.matrix, f, v))
                self.corrections += 1
            else:
                v = relax(self.relaxation, system.matrix, f, v, self.omega)
                self.sweeps += 1
        return v

    def cycle(self, f: FloatArray, v: FloatArray, level: int = 0) -> FloatArray:
        if level == self.levels - 1 and self._coarse_lu is not None:
            return lu_substitute(self._coarse_lu, f)

        v = self._block(level, f, v)
        if level < self.levels - 1:
            transfer = self.transfers[level]
            r = residual(self.systems[level].matrix, f, v)
            coarse_f = transfer.restrict(r)
            coarse_v = self.cycle(coarse_f, np.zeros_like(coarse_f), level + 1)
            v = v + transfer.prolong(coarse_v)
        return self._block(level, f, v)


def v_cycle(
    systems: list[LinearSystem],
    f: FloatArray,
    v: FloatArray,
    relaxation: Relaxation,
    omega: float,
    n_rl: int,
    coarse_direct_max: int = 32,
) -> FloatArray:
    """One classical V-cycle, starting from ``v`` on the finest level."""
    return VCycle(systems, relaxation, omega, n_rl, coarse_direct_max).cycle(f, v)
