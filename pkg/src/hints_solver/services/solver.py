import threading
import time
import weakref
from typing import NamedTuple

import numpy as np
from loguru import logger

from hints_solver.core.errors import GridIncompatible, ModelMissing
from hints_solver.core.models import (
    EigenDecomposition,
    FieldSample,
    FloatArray,
    LinearSystem,
    ProblemSpec,
    SolveStatus,
    SolverConfig,
    SolveTrace,
    StepKind,
    TraceRecord,
)
from hints_solver.core.ports import IAssembler, ICorrectionOperator
from hints_solver.core.registry import ComponentRegistry
from hints_solver.infrastructure.discretization.assembly import revert_residual
from hints_solver.infrastructure.discretization.interpolation import interpolate_field
from hints_solver.infrastructure.linalg.dense import (
    LuFactors,
    lu_factor,
    lu_solve,
    lu_substitute,
    symmetric_eig,
)
from hints_solver.infrastructure.network.deeponet import DeepOnetModel
from hints_solver.infrastructure.solvers.multigrid import VCycle, build_hierarchy
from hints_solver.infrastructure.solvers.relaxation import relax, residual


class DeepOnetCorrector:
    """Residual -> correction through a trained operator network.

    The residual is reverted to nodal values, interpolated onto the network's training
    grid together with k, and the trunk is queried at the system's interior nodes.
    """

    name = "deeponet"

    def __init__(self, model: DeepOnetModel) -> None:
        self.model = model
        self._k_cache: weakref.WeakKeyDictionary[LinearSystem, FieldSample] = (
            weakref.WeakKeyDictionary()
        )
        self._lock = threading.Lock()

    def validate(self, system: LinearSystem) -> None:
        if system.grid.domain is not self.model.grid.domain:
            raise GridIncompatible(
                f"Model trained on the {self.model.grid.domain} domain cannot correct a "
                f"system on the {system.grid.domain} domain"
            )

    def _k_on_model_grid(self, system: LinearSystem) -> FieldSample:
        with self._lock:
            cached = self._k_cache.get(system)
        if cached is None:
            cached = interpolate_field(system.problem.k_field, self.model.grid)
            with self._lock:
                self._k_cache[system] = cached
        return cached

    def correct(self, system: LinearSystem, residual: FloatArray) -> FloatArray:
        self.validate(system)
        r_field = interpolate_field(revert_residual(residual, system), self.model.grid)
        k_field = self._k_on_model_grid(system)
        return self.model.forward(k_field, r_field, system.grid.interior_nodes)


class ExactCorrector:
    """Direct solve of ``A dv = r``; stands in for a perfect network."""

    name = "exact"

    def __init__(self) -> None:
        self._factors: weakref.WeakKeyDictionary[LinearSystem, LuFactors] = (
            weakref.WeakKeyDictionary()
        )
        self._lock = threading.Lock()

    def validate(self, system: LinearSystem) -> None:
        return None

    def correct(self, system: LinearSystem, residual: FloatArray) -> FloatArray:
        with self._lock:
            factors = self._factors.get(system)
            if factors is None:
                factors = lu_factor(system.matrix.to_dense())
                self._factors[system] = factors
        return lu_substitute(factors, residual)


class _Monitor:
    """Builds trace records and applies the stopping rules."""

    def __init__(
        self,
        system: LinearSystem,
        cfg: SolverConfig,
        truth: FloatArray | None,
        eig: EigenDecomposition | None,
    ) -> None:
        self.system = system
        self.truth = truth
        self.eig = eig
        self.modes = [j for j in cfg.tracked_modes if eig is not None and j <= eig.size]
        self.rhs_l2 = float(np.linalg.norm(system.rhs))
        self.tolerance = cfg.tolerance * self.rhs_l2
        self.guard = cfg.divergence_factor * self.rhs_l2
        self.growth_window = cfg.growth_window if cfg.kind.is_multigrid else 0
        self._history: list[float] = []
        self.trace = SolveTrace(tracked_modes=self.modes, rhs_l2=self.rhs_l2)

    def record(self, index: int, kind: StepKind, v: FloatArray, r: FloatArray) -> bool:
        """Appends a record and returns True when the solve should stop."""
        res = float(np.linalg.norm(r))
        err_l2 = None
        modes: list[float] = []
        if self.truth is not None:
            error = self.truth - v
            err_l2 = float(np.linalg.norm(error))
            if self.eig is not None and self.modes:
                coefficients = self.eig.coefficients(error)
                modes = [float(coefficients[j - 1]) for j in self.modes]
        self.trace.append(
            TraceRecord(index=index, step_kind=kind, res_l2=res, err_l2=err_l2, modes=modes)
        )

        self._history.append(res)
        finite = np.isfinite(res) and bool(np.all(np.isfinite(v)))
        if not finite or res > self.guard or self._growing():
            self.trace.status = SolveStatus.DIVERGED
            return True
        if res <= self.tolerance:
            self.trace.status = SolveStatus.CONVERGED
            return True
        return False

    def _growing(self) -> bool:
        """Residual above |f| over the whole window and larger than just before it."""
        window = self.growth_window
        if window == 0 or len(self._history) <= window:
            return False
        recent = self._history[-window:]
        return min(recent) > self.rhs_l2 and recent[-1] > self._history[-window - 1]


def hints_solve(
    system: LinearSystem,
    cfg: SolverConfig,
    corrector: ICorrectionOperator | None = None,
    truth: FloatArray | None = None,
    eig: EigenDecomposition | None = None,
    assembler: IAssembler | None = None,
) -> tuple[FloatArray, SolveTrace]:
    """Runs a classical, multigrid or hybrid solve from a zero initial guess.

    Single-grid kinds count relaxation steps from 1 and replace step k by a correction
    when ``k % n_r == 0`` (hybrid kinds). Multigrid kinds record one step per V-cycle.
    """
    kind = cfg.kind
    needs_corrector = kind.is_hybrid or (cfg.deeponet_init and not kind.is_multigrid)
    if needs_corrector and corrector is None:
        raise ModelMissing(f"Solver kind '{kind}' needs a correction model")
    if corrector is not None and needs_corrector:
        corrector.validate(system)

    omega = cfg.damping(system.grid.dimension)
    relaxation = cfg.relaxation_for()
    a, f = system.matrix, system.rhs
    v = np.zeros(system.size)
    monitor = _Monitor(system, cfg, truth, eig)

    if monitor.record(0, StepKind.INIT, v, f):
        return v, monitor.trace

    if kind.is_multigrid:
        assembler = assembler or ComponentRegistry.get_assembler(
            system.problem.equation, system.grid.kind
        )
        systems = build_hierarchy(system, cfg.levels, assembler)
        if len(systems) > 1 and systems[-1].size > cfg.coarse_direct_max:
            logger.warning(
                "Coarsest level has {} unknowns (coarse_direct_max = {}): relaxed, not solved",
                systems[-1].size,
                cfg.coarse_direct_max,
            )
        if kind.is_hybrid and (cfg.n_r is None or cfg.n_r > cfg.n_rl):
            logger.warning(
                "n_r = {} never fits in a block of n_rl = {} steps: no correction is applied",
                cfg.n_r,
                cfg.n_rl,
            )
        cycle = VCycle(
            systems,
            relaxation,
            omega,
            cfg.n_rl,
            cfg.coarse_direct_max,
            corrector=corrector if kind.is_hybrid else None,
            n_r=cfg.n_r,
            correct_on_coarsest=cfg.deeponet_on_coarsest,
        )
        for index in range(1, cfg.max_cycles + 1):
            v = cycle.cycle(f, v)
            if monitor.record(index, StepKind.VCYCLE, v, residual(a, f, v)):
                break
    else:
        r = f
        for index in range(1, cfg.max_iterations + 1):
            if cfg.deeponet_init:
                use_corrector = index == 1
            else:
                use_corrector = kind.is_hybrid and cfg.n_r is not None and index % cfg.n_r == 0

            if use_corrector:
                assert corrector is not None
                v = v + corrector.correct(system, r)
                step = StepKind.DEEPONET
            else:
                v = relax(relaxation, a, f, v, omega)
                step = StepKind.RELAX
            r = residual(a, f, v)
            if monitor.record(index, step, v, r):
                break

    trace = monitor.trace
    last = trace.records[-1]
    ratio = last.res_l2 / monitor.rhs_l2 if monitor.rhs_l2 else 0.0
    if trace.status is SolveStatus.MAX_ITERATIONS:
        logger.warning("{} stopped at the iteration cap: |r|/|f| = {:.3e}", kind, ratio)
    else:
        logger.debug(
            "{} {} after {} steps: |r|/|f| = {:.3e}", kind, trace.status, last.index, ratio
        )
    return v, trace


class SolveOutcome(NamedTuple):
    system: LinearSystem
    solution: FloatArray
    trace: SolveTrace
    timings: dict[str, float]


class SolverService:
    """Assembles a problem, optionally computes the reference solution, and runs the solve."""

    def __init__(self, cfg: SolverConfig, corrector: ICorrectionOperator | None = None) -> None:
        self.cfg = cfg
        self.corrector = corrector

    def solve(self, problem: ProblemSpec, n: int | None = None) -> SolveOutcome:
        timings: dict[str, float] = {}

        start = time.perf_counter()
        assembler = ComponentRegistry.get_assembler(problem.equation, problem.grid.kind)
        system = assembler(problem, n)
        timings["assembly"] = time.perf_counter() - start

        truth: FloatArray | None = None
        eig: EigenDecomposition | None = None
        if self.cfg.track_truth:
            start = time.perf_counter()
            truth = lu_solve(system.matrix.to_dense(), system.rhs)
            if self.cfg.tracked_modes:
                eig = symmetric_eig(system.matrix.to_dense(), system.grid.interior_layout())
            timings["reference"] = time.perf_counter() - start

        start = time.perf_counter()
        v, trace = hints_solve(system, self.cfg, self.corrector, truth, eig, assembler)
        timings["iteration"] = time.perf_counter() - start

        for phase, seconds in timings.items():
            logger.info("Phase {:<10} {:.3f}s", phase, seconds)
        return SolveOutcome(system, v, trace, timings)
