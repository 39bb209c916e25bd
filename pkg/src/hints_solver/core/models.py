from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from hints_solver.core.errors import DimensionMismatch, NonFiniteValue, NonPositiveCoefficient

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]


class Equation(StrEnum):
    POISSON = "poisson"
    HELMHOLTZ = "helmholtz"


class Domain(StrEnum):
    INTERVAL = "interval"
    UNIT_SQUARE = "unit-square"
    L_SHAPE = "l-shape"


class GridKind(StrEnum):
    UNIFORM_INTERVAL = "uniform-interval"
    UNIFORM_SQUARE = "uniform-square"
    L_SHAPED_TRIANGULATION = "l-shaped-triangulation"
    SQUARE_TRIANGULATION = "square-triangulation"

    @property
    def domain(self) -> Domain:
        if self is GridKind.UNIFORM_INTERVAL:
            return Domain.INTERVAL
        if self is GridKind.L_SHAPED_TRIANGULATION:
            return Domain.L_SHAPE
        return Domain.UNIT_SQUARE

    @property
    def is_triangulation(self) -> bool:
        return self in (GridKind.L_SHAPED_TRIANGULATION, GridKind.SQUARE_TRIANGULATION)


class SolverKind(StrEnum):
    JACOBI = "jacobi"
    GS = "gs"
    MG = "mg"
    HINTS_JACOBI = "hints-jacobi"
    HINTS_GS = "hints-gs"
    HINTS_MG = "hints-mg"

    @property
    def is_hybrid(self) -> bool:
        return self.value.startswith("hints-")

    @property
    def is_multigrid(self) -> bool:
        return self in (SolverKind.MG, SolverKind.HINTS_MG)

    @property
    def relaxation(self) -> Relaxation | None:
        """Relaxation implied by a single-grid kind; None for multigrid kinds."""
        if self in (SolverKind.JACOBI, SolverKind.HINTS_JACOBI):
            return Relaxation.JACOBI
        if self in (SolverKind.GS, SolverKind.HINTS_GS):
            return Relaxation.GS
        return None


class Relaxation(StrEnum):
    JACOBI = "jacobi"
    GS = "gs"


class StepKind(StrEnum):
    INIT = "init"
    RELAX = "relax"
    DEEPONET = "deeponet"
    VCYCLE = "vcycle"


class SolveStatus(StrEnum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max-iterations"
    DIVERGED = "diverged"


class MaskKind(StrEnum):
    """Boundary post-processing applied to DeepONet outputs."""

    INTERVAL = "interval"  # x(x-1)
    SQUARE = "square"  # xy(x-1)(y-1)
    NONE = "none"


def _require_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue(f"{what} contains NaN or Inf entries")


# ---------------------------------------------------------------------------
# Linear algebra containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Compressed-row storage of a float64 matrix."""

    rows: int
    cols: int
    offsets: IntArray
    indices: IntArray
    values: FloatArray

    def __post_init__(self) -> None:
        if self.offsets.shape != (self.rows + 1,):
            raise DimensionMismatch(
                f"Expected {self.rows + 1} row offsets, got {self.offsets.shape[0]}"
            )
        if self.offsets[0] != 0 or np.any(np.diff(self.offsets) < 0):
            raise ValueError("Row offsets must start at 0 and be nondecreasing")
        if self.offsets[-1] != self.values.shape[0] or self.indices.shape != self.values.shape:
            raise DimensionMismatch("Last row offset must equal the number of stored values")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.cols):
            raise DimensionMismatch("Column index out of range")
        # strictly increasing column indices inside each row
        steps = np.diff(self.indices)
        same_row = np.diff(self.row_ids) == 0
        if np.any(steps[same_row] <= 0):
            raise ValueError("Column indices must be strictly increasing within each row")
        _require_finite(self.values, "SparseMatrix")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.values.shape[0])

    @cached_property
    def row_ids(self) -> IntArray:
        """Row index of every stored value."""
        return np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.offsets))

    def diagonal(self) -> FloatArray:
        diag = np.zeros(min(self.rows, self.cols))
        on_diag = self.row_ids == self.indices
        diag[self.indices[on_diag]] = self.values[on_diag]
        return diag

    def to_dense(self) -> FloatArray:
        dense = np.zeros(self.shape)
        dense[self.row_ids, self.indices] = self.values
        return dense


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, ascending eigenvalues, columns of unit norm.

    ``frequency_order[m]`` is the column index of the m-th lowest-frequency mode.
    """

    eigenvalues: FloatArray
    eigenvectors: FloatArray
    frequency_order: IntArray

    @property
    def size(self) -> int:
        return int(self.eigenvalues.shape[0])

    def mode(self, j: int) -> FloatArray:
        """Eigenvector of the j-th lowest-frequency mode (1-based, as in mode plots)."""
        if not 1 <= j <= self.size:
            raise IndexError(f"Mode {j} outside 1..{self.size}")
        return self.eigenvectors[:, self.frequency_order[j - 1]]

    def mode_eigenvalue(self, j: int) -> float:
        return float(self.eigenvalues[self.frequency_order[j - 1]])

    def coefficients(self, e: FloatArray) -> FloatArray:
        """Expansion coefficients of e in the eigenbasis, lowest frequency first."""
        if e.shape != (self.size,):
            raise DimensionMismatch(f"Vector of shape {e.shape} for a basis of size {self.size}")
        return self.eigenvectors[:, self.frequency_order].T @ e


# ---------------------------------------------------------------------------
# Grids, fields and assembled systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Grid:
    """Nodes of a discretized domain.

    ``lattice`` maps structured 2D grids onto an (ny+1, nx+1) array of node indices,
    rows running along y, with -1 where the lattice point is outside the domain.
    """

    kind: GridKind
    subdivisions: tuple[int, ...]
    nodes: FloatArray
    boundary: NDArray[np.bool_]
    triangles: IntArray | None = None
    lattice: IntArray | None = None

    def __post_init__(self) -> None:
        if self.boundary.shape != (self.nodes.shape[0],):
            raise DimensionMismatch("Boundary flags must match node count")
        if self.kind.is_triangulation and self.triangles is None:
            raise ValueError(f"{self.kind} grids need a triangle list")

    @property
    def dimension(self) -> int:
        return int(self.nodes.shape[1])

    @property
    def domain(self) -> Domain:
        return self.kind.domain

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def h(self) -> float:
        return 1.0 / self.subdivisions[0]

    @cached_property
    def interior(self) -> IntArray:
        """Node indices of the unknowns, in equation-row order."""
        return np.flatnonzero(~self.boundary).astype(np.int64)

    @property
    def interior_nodes(self) -> FloatArray:
        return self.nodes[self.interior]

    def interior_layout(self) -> IntArray | None:
        """Lattice of interior positions (-1 elsewhere), used for 2D frequency counting."""
        if self.lattice is None:
            return None
        position = np.full(self.n_nodes, -1, dtype=np.int64)
        position[self.interior] = np.arange(self.interior.shape[0])
        layout = np.where(self.lattice >= 0, position[np.maximum(self.lattice, 0)], -1)
        return layout

    def matches(self, other: Grid) -> bool:
        return self.kind == other.kind and self.subdivisions == other.subdivisions

    def describe(self) -> dict[str, object]:
        return {"kind": self.kind.value, "subdivisions": list(self.subdivisions)}


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Values of a scalar function at every node of a grid (boundary included)."""

    grid: Grid
    values: FloatArray

    def __post_init__(self) -> None:
        if self.values.shape != (self.grid.n_nodes,):
            raise DimensionMismatch(
                f"Field has {self.values.shape} values for {self.grid.n_nodes} nodes"
            )
        _require_finite(self.values, "FieldSample")

    def scaled(self, factor: float) -> FieldSample:
        return FieldSample(self.grid, self.values * factor)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One instance of a PDE family: equation, coefficient k and forcing f."""

    equation: Equation
    k_field: FieldSample
    f_field: FieldSample

    def __post_init__(self) -> None:
        if not self.k_field.grid.matches(self.f_field.grid):
            raise DimensionMismatch("k and f must be sampled on the same grid")
        if self.equation is Equation.POISSON and np.any(self.k_field.values <= 0.0):
            raise NonPositiveCoefficient(
                f"Poisson coefficient must be positive, min is {self.k_field.values.min():.3g}"
            )

    @property
    def grid(self) -> Grid:
        return self.k_field.grid

    @property
    def dimension(self) -> int:
        return self.grid.dimension

    @property
    def domain(self) -> Domain:
        return self.grid.domain


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Assembled ``A u = f`` over the interior nodes of ``problem.grid``."""

    matrix: SparseMatrix
    rhs: FloatArray
    problem: ProblemSpec

    def __post_init__(self) -> None:
        n = self.grid.interior.shape[0]
        if self.matrix.shape != (n, n) or self.rhs.shape != (n,):
            raise DimensionMismatch(
                f"System of size {self.matrix.shape} / {self.rhs.shape} for {n} interior nodes"
            )

    @property
    def grid(self) -> Grid:
        return self.problem.grid

    @property
    def size(self) -> int:
        return int(self.rhs.shape[0])

    @property
    def interior(self) -> IntArray:
        return self.grid.interior


@dataclass(frozen=True, eq=False)
class Dataset:
    """Training triples (k, f, u) sampled on every node of one grid, one row per sample."""

    equation: Equation
    grid: Grid
    k: FloatArray
    f: FloatArray
    u: FloatArray
    metadata: dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        shape = (self.k.shape[0], self.grid.n_nodes)
        if any(a.shape != shape for a in (self.k, self.f, self.u)):
            raise DimensionMismatch(
                f"Dataset arrays {self.k.shape}/{self.f.shape}/{self.u.shape} "
                f"for {self.grid.n_nodes} nodes"
            )

    @property
    def count(self) -> int:
        return int(self.k.shape[0])

    def subset(self, rows: IntArray) -> Dataset:
        return Dataset(
            self.equation, self.grid, self.k[rows], self.f[rows], self.u[rows], self.metadata
        )


# ---------------------------------------------------------------------------
# Configuration models
# ---------------------------------------------------------------------------


class GrfConfig(BaseModel):
    """Gaussian random field with squared-exponential covariance."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mean: float = 0.0
    sigma: float = Field(1.0, ge=0.0)
    length_scale: float = Field(0.1, gt=0.0)
    k_min: float | None = None
    seed: int = 0

    @model_validator(mode="after")
    def _check_bound(self) -> GrfConfig:
        if self.k_min is not None and self.k_min >= self.mean:
            raise ValueError(f"k_min ({self.k_min}) must be below the mean ({self.mean})")
        return self

    @classmethod
    def coefficient_defaults(cls, equation: Equation, domain: Domain) -> GrfConfig:
        """Coefficient field parameters used for the training data of each problem."""
        if equation is Equation.POISSON:
            return cls(mean=1.0, k_min=0.3, sigma=0.3, length_scale=0.1)
        if domain is Domain.INTERVAL:
            return cls(mean=8.0, k_min=3.0, sigma=2.0, length_scale=0.2)
        return cls(mean=6.0, k_min=3.0, sigma=0.5, length_scale=0.3)

    @classmethod
    def forcing_defaults(cls) -> GrfConfig:
        return cls(mean=0.0, sigma=1.0, length_scale=0.1)


class TrainConfig(BaseModel):
    """Mini-batch Adam schedule and weighted-loss parameters."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(10_000, ge=0)
    batch_size: int = Field(500, gt=0)
    learning_rate: float = Field(1e-3, ge=0.0)
    decay_factor: float = Field(0.5, gt=0.0)
    decay_every: int = Field(5_000, gt=0)
    alpha: float | None = Field(None, ge=0.0)
    eps: float = Field(1e-3, gt=0.0)
    test_fraction: float = Field(0.1, ge=0.0, lt=1.0)
    seed: int = 0

    @classmethod
    def for_dimension(cls, dimension: int, **overrides: object) -> TrainConfig:
        """Default schedule for 1D or 2D models; 2D trains longer at a fixed rate of 1e-4."""
        preset: dict[str, object] = {}
        if dimension != 1:
            preset = {
                "epochs": 25_000,
                "batch_size": 10_000,
                "learning_rate": 1e-4,
                "decay_factor": 1.0,
            }
        return cls.model_validate(preset | overrides)

    def learning_rate_at(self, epoch: int) -> float:
        return self.learning_rate * self.decay_factor ** (epoch // self.decay_every)

    def loss_exponent(self, equation: Equation, dimension: int) -> float:
        """Configured alpha, else 0 for 1D Poisson, 1 for 1D Helmholtz and 2 otherwise."""
        if self.alpha is not None:
            return self.alpha
        if dimension == 1:
            return 0.0 if equation is Equation.POISSON else 1.0
        return 2.0


class NetworkConfig(BaseModel):
    """Layer widths (input width excluded) and initialization seed; None picks the defaults."""

    model_config = ConfigDict(extra="forbid")

    branch_widths: list[int] | None = None
    trunk_widths: list[int] | None = None
    conv_channels: list[int] | None = None
    seed: int = 0

    def resolved(self, dimension: int) -> tuple[list[int], list[int], list[int]]:
        """(branch dense widths, trunk widths, conv channels) for a 1D or 2D model."""
        if dimension == 1:
            branch, trunk, conv = [60, 60, 60], [60, 60, 60], []
        else:
            branch, trunk, conv = [80, 80], [80, 80, 80], [40, 60, 100, 180]
        return (
            self.branch_widths or branch,
            self.trunk_widths or trunk,
            conv if dimension == 1 else (self.conv_channels or conv),
        )


class SolverConfig(BaseModel):
    """Iteration control for classical, multigrid and hybrid solves."""

    model_config = ConfigDict(extra="forbid")

    kind: SolverKind = SolverKind.HINTS_JACOBI
    omega: float | None = Field(None, gt=0.0, le=1.0)
    n_r: int | None = Field(25, ge=2)
    max_iterations: int = Field(1_000, gt=0)
    max_cycles: int = Field(30, gt=0)
    n_rl: int = Field(3, gt=0)
    levels: int = Field(1, ge=1)
    relaxation: Relaxation = Relaxation.JACOBI
    tolerance: float = Field(1e-12, gt=0.0)
    divergence_factor: float = Field(1e12, gt=1.0)
    coarse_direct_max: int = Field(32, ge=0)
    growth_window: int = Field(5, ge=0)
    deeponet_on_coarsest: bool = True
    deeponet_init: bool = False
    track_truth: bool = False
    tracked_modes: list[int] = Field(default_factory=lambda: [1, 5, 10])

    def damping(self, dimension: int) -> float:
        """Configured omega, or the per-dimension default (2/3 in 1D, 4/5 in 2D)."""
        if self.omega is not None:
            return self.omega
        return {1: 2.0 / 3.0, 2: 4.0 / 5.0}.get(dimension, 6.0 / 7.0)

    def relaxation_for(self) -> Relaxation:
        return self.kind.relaxation or self.relaxation


# ---------------------------------------------------------------------------
# Solve traces and analysis results
# ---------------------------------------------------------------------------


class TraceRecord(BaseModel):
    """State after one solver step."""

    index: int
    step_kind: StepKind
    res_l2: float
    err_l2: float | None = None
    modes: list[float] = []


class SolveTrace(BaseModel):
    records: list[TraceRecord] = []
    tracked_modes: list[int] = []
    status: SolveStatus = SolveStatus.MAX_ITERATIONS
    rhs_l2: float = 0.0

    def append(self, record: TraceRecord) -> None:
        if self.records and record.index <= self.records[-1].index:
            raise ValueError("Trace indices must be strictly increasing")
        self.records.append(record)

    @property
    def iterations(self) -> int:
        return self.records[-1].index if self.records else 0

    def residuals(self) -> FloatArray:
        return np.array([r.res_l2 for r in self.records])

    def indices(self) -> IntArray:
        return np.array([r.index for r in self.records], dtype=np.int64)

    def residual_at(self, index: int) -> float:
        for record in self.records:
            if record.index == index:
                return record.res_l2
        raise KeyError(f"No trace record at iteration {index}")


@dataclass(frozen=True)
class ModeTransferMatrix:
    """Per-mode output error of a corrector.

    ``entries[j, i]`` is the geometric-mean |coefficient| of mode i+1 in the output error
    when the input is pure mode j+1.
    """

    entries: FloatArray
    sample_count: int

    def __post_init__(self) -> None:
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise DimensionMismatch("Mode transfer matrix must be square")
        if np.any(self.entries < 0.0):
            raise ValueError("Mode transfer entries must be nonnegative")

    @property
    def n_modes(self) -> int:
        return int(self.entries.shape[0])

    def n_cut(self, threshold: float = 0.5) -> int:
        """Largest m such that modes 1..m are all reduced below ``threshold``."""
        diagonal = np.diag(self.entries)
        below = diagonal < threshold
        return int(np.argmin(below)) if not below.all() else self.n_modes


@dataclass(frozen=True)
class RateSweepResult:
    """Convergence rates per (case, n_r); diverged or undefined cases hold -inf."""

    n_r_values: list[int]
    mu: FloatArray

    @property
    def case_count(self) -> int:
        return int(self.mu.shape[0])

    def _finite_columns(self) -> list[FloatArray]:
        return [col[np.isfinite(col)] for col in self.mu.T]

    @property
    def mean(self) -> FloatArray:
        return np.array([c.mean() if c.size else -np.inf for c in self._finite_columns()])

    @property
    def std(self) -> FloatArray:
        return np.array([c.std() if c.size else np.nan for c in self._finite_columns()])

    @property
    def best_n_r(self) -> list[int]:
        """Per-case maximizer of mu."""
        return [self.n_r_values[int(np.argmax(row))] for row in self.mu]
