"""Eigenmode diagnostics: decompositions, convergence rates, mode transfer, n_r sweeps."""

from concurrent.futures import ThreadPoolExecutor
from itertools import product

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike

from hints_solver.core.errors import NonPositiveResidual, ZeroImage
from hints_solver.core.models import (
    EigenDecomposition,
    FloatArray,
    LinearSystem,
    ModeTransferMatrix,
    RateSweepResult,
    SolverConfig,
    SolveStatus,
    SolveTrace,
    SparseMatrix,
)
from hints_solver.core.ports import ICorrectionOperator
from hints_solver.infrastructure.linalg.dense import symmetric_eig
from hints_solver.infrastructure.linalg.sparse import spmv
from hints_solver.services.solver import hints_solve

GEOMETRIC_FLOOR = 1e-16
MACHINE_FLOOR = 10.0 * np.finfo(np.float64).eps


def mode_decompose(e: ArrayLike, eig: EigenDecomposition) -> FloatArray:
    """Coefficients of e in the eigenbasis, lowest-frequency mode first."""
    return eig.coefficients(np.asarray(e, dtype=np.float64))


def loading_vector(a: SparseMatrix | ArrayLike, phi: ArrayLike) -> FloatArray:
    """``A phi / |A phi|``: the forcing whose exact response is proportional to phi."""
    vec = np.asarray(phi, dtype=np.float64)
    image = spmv(a, vec) if isinstance(a, SparseMatrix) else np.asarray(a, dtype=np.float64) @ vec
    norm = float(np.linalg.norm(image))
    if norm == 0.0:
        raise ZeroImage("A maps the mode to zero")
    return image / norm


def convergence_rate(trace: SolveTrace, start: int, end: int) -> float:
    """Decimal orders of residual reduction per iteration between two trace indices."""
    if start >= end:
        raise ValueError(f"Rate window needs start < end, got [{start}, {end}]")
    r_start, r_end = trace.residual_at(start), trace.residual_at(end)
    if r_start <= 0.0 or r_end <= 0.0:
        raise NonPositiveResidual(f"Zero residual in the window [{start}, {end}]")
    return float(np.log10(r_start / r_end) / (end - start))


def steady_window(trace: SolveTrace, max_iterations: int) -> tuple[int, int] | None:
    """Iteration window where the residual decays steadily.

    Starts where |r| first drops below half of |r_0| (else at 20% of the iteration cap)
    and ends at the last iteration still above ten machine epsilons of |f|.
    """
    indices = trace.indices()
    residuals = trace.residuals()
    if indices.size < 2:
        return None

    below = np.flatnonzero(residuals < 0.5 * residuals[0])
    start = int(indices[below[0]]) if below.size else int(0.2 * max_iterations)
    above = np.flatnonzero(residuals > MACHINE_FLOOR * trace.rhs_l2)
    if not above.size:
        return None
    end = int(indices[above[-1]])
    if end <= start or start not in set(indices.tolist()):
        return None
    return start, end


def trace_rate(trace: SolveTrace, max_iterations: int) -> float:
    """Steady-window rate of a finished solve; -inf when diverged or undefined."""
    if trace.status is SolveStatus.DIVERGED:
        return float("-inf")
    window = steady_window(trace, max_iterations)
    if window is None:
        return float("-inf")
    return convergence_rate(trace, *window)


def mode_transfer(
    corrector: ICorrectionOperator,
    systems: list[LinearSystem],
    n_modes: int,
) -> ModeTransferMatrix:
    """Geometric-mean mode content of the corrector's error on pure-mode inputs.

    For mode j the residual is ``A phi_j``, whose exact correction is ``phi_j``; row j
    holds |coefficients| of ``correct(A phi_j) - phi_j``, averaged in log space over
    systems with a 1e-16 floor.
    """
    log_sum = np.zeros((n_modes, n_modes))
    for system in systems:
        dense = system.matrix.to_dense()
        if n_modes > system.size:
            raise ValueError(f"{n_modes} modes requested for a system of size {system.size}")
        eig = symmetric_eig(dense, system.grid.interior_layout())
        for j in range(1, n_modes + 1):
            phi = eig.mode(j)
            error = corrector.correct(system, dense @ phi) - phi
            coefficients = np.abs(eig.coefficients(error))[:n_modes]
            log_sum[j - 1] += np.log(np.maximum(coefficients, GEOMETRIC_FLOOR))

    entries = np.exp(log_sum / max(len(systems), 1))
    matrix = ModeTransferMatrix(entries, len(systems))
    logger.info("Mode transfer over {} systems: n_cut = {}", len(systems), matrix.n_cut())
    return matrix


def loading_vectors(system: LinearSystem, n_modes: int) -> FloatArray:
    """Columns ``A phi_i / |A phi_i|`` for the first n_modes frequency-ordered modes."""
    eig = symmetric_eig(system.matrix.to_dense(), system.grid.interior_layout())
    return np.column_stack(
        [loading_vector(system.matrix, eig.mode(j)) for j in range(1, n_modes + 1)]
    )


def rate_sweep(
    systems: list[LinearSystem],
    corrector: ICorrectionOperator,
    n_r_values: list[int],
    cfg: SolverConfig,
    threads: int = 1,
) -> RateSweepResult:
    """Solves every (system, n_r) pair and collects steady-window convergence rates."""
    cases = list(product(range(len(systems)), n_r_values))

    def _run(case: tuple[int, int]) -> float:
        index, n_r = case
        _, trace = hints_solve(systems[index], cfg.model_copy(update={"n_r": n_r}), corrector)
        return trace_rate(trace, cfg.max_iterations)

    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        rates = list(pool.map(_run, cases))

    mu = np.array(rates, dtype=np.float64).reshape(len(systems), len(n_r_values))
    diverged = int(np.count_nonzero(~np.isfinite(mu)))
    if diverged:
        logger.warning("{} of {} sweep runs diverged or had no decay window", diverged, mu.size)
    return RateSweepResult(list(n_r_values), mu)
