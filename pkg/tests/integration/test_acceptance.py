"""Desk-scale acceptance runs: trained models inside full solves.

These train real networks and run hundreds of solves; they are excluded from the
default test task and run with ``pytest -m slow``.
"""

import numpy as np
import pytest

from hints_solver.core.models import (
    Equation,
    GrfConfig,
    NetworkConfig,
    SolverConfig,
    SolverKind,
    SolveStatus,
    StepKind,
    TrainConfig,
)
from hints_solver.infrastructure.discretization.grids import uniform_interval, uniform_square
from hints_solver.infrastructure.network.deeponet import DeepOnetModel
from hints_solver.services.analysis import mode_transfer, rate_sweep
from hints_solver.services.datagen import (
    TEST_STREAMS,
    TRAIN_STREAMS,
    DataGenerationService,
    ProblemSampler,
)
from hints_solver.services.solver import (
    DeepOnetCorrector,
    ExactCorrector,
    SolverService,
    hints_solve,
)
from hints_solver.services.training import train

pytestmark = pytest.mark.slow

CASES = 20
SEED = 11


def sampler(equation: Equation, grid, streams=TEST_STREAMS) -> ProblemSampler:
    return ProblemSampler(
        equation,
        grid,
        GrfConfig.coefficient_defaults(equation, grid.domain),
        GrfConfig.forcing_defaults(),
        seed=SEED,
        streams=streams,
    )


def trained_corrector(equation: Equation, alpha: float) -> DeepOnetCorrector:
    data = DataGenerationService(sampler(equation, uniform_interval(30), TRAIN_STREAMS), threads=4)
    dataset = data.generate(1_000)
    model = DeepOnetModel.build(dataset.grid, NetworkConfig(seed=SEED))
    train(model, dataset, TrainConfig(epochs=2_000, alpha=alpha, seed=SEED))
    return DeepOnetCorrector(model)


def converged(traces) -> int:
    return sum(trace.status is SolveStatus.CONVERGED for trace in traces)


@pytest.fixture(scope="module")
def poisson_corrector() -> DeepOnetCorrector:
    return trained_corrector(Equation.POISSON, alpha=0.0)


@pytest.fixture(scope="module")
def helmholtz_corrector() -> DeepOnetCorrector:
    return trained_corrector(Equation.HELMHOLTZ, alpha=1.0)


@pytest.fixture(scope="module")
def poisson_systems():
    return sampler(Equation.POISSON, uniform_interval(30)).systems(CASES)


@pytest.fixture(scope="module")
def helmholtz_systems():
    return sampler(Equation.HELMHOLTZ, uniform_interval(30)).systems(CASES)


class TestClassicalBaselines:
    def test_helmholtz_jacobi_diverges(self, helmholtz_systems):
        cfg = SolverConfig(kind=SolverKind.JACOBI, max_iterations=5_000)
        traces = [hints_solve(system, cfg)[1] for system in helmholtz_systems]
        diverged = sum(trace.status is SolveStatus.DIVERGED for trace in traces)
        assert diverged >= 18

    def test_multigrid_on_fine_poisson(self, make_system):
        system = make_system(Equation.POISSON, uniform_interval(256), k=1.0, f=1.0)
        cfg = SolverConfig(kind=SolverKind.MG, levels=5, n_rl=3, max_cycles=15, tolerance=1e-8)
        _, trace = hints_solve(system, cfg)
        assert trace.status is SolveStatus.CONVERGED

    def test_multigrid_on_2d_helmholtz_diverges(self):
        systems = sampler(Equation.HELMHOLTZ, uniform_square(32)).systems(10)
        cfg = SolverConfig(kind=SolverKind.MG, levels=3, n_rl=3, max_cycles=30)
        traces = [hints_solve(system, cfg)[1] for system in systems]
        assert sum(trace.status is SolveStatus.DIVERGED for trace in traces) >= 7


class TestHybridPoisson:
    """A Poisson model trained on n = 30 inside HINTS solves."""

    def test_converges_where_jacobi_stalls(self, poisson_corrector):
        hybrid = SolverService(
            SolverConfig(
                kind=SolverKind.HINTS_JACOBI,
                n_r=25,
                max_iterations=1_000,
                track_truth=True,
                tracked_modes=[],
            ),
            poisson_corrector,
        )
        jacobi = SolverService(
            SolverConfig(
                kind=SolverKind.JACOBI, max_iterations=400, track_truth=True, tracked_modes=[]
            )
        )
        problems = sampler(Equation.POISSON, uniform_interval(30))
        traces = []
        ahead = 0
        for index in range(CASES):
            mixed = hybrid.solve(problems.problem(index)).trace
            plain = jacobi.solve(problems.problem(index)).trace
            traces.append(mixed)
            mixed_err = mixed.records[min(400, len(mixed.records) - 1)].err_l2
            ahead += plain.records[-1].err_l2 >= 100 * mixed_err
        assert converged(traces) >= 18
        assert ahead >= 18

    def test_correction_steps_reduce_the_smoothest_mode(self, poisson_corrector):
        cfg = SolverConfig(
            kind=SolverKind.HINTS_JACOBI,
            n_r=25,
            max_iterations=200,
            track_truth=True,
            tracked_modes=[1],
        )
        service = SolverService(cfg, poisson_corrector)
        problems = sampler(Equation.POISSON, uniform_interval(30))
        reduced = total = 0
        for index in range(CASES):
            records = service.solve(problems.problem(index)).trace.records
            for before, after in zip(records, records[1:]):
                if after.step_kind is StepKind.DEEPONET and abs(before.modes[0]) > 1e-14:
                    total += 1
                    reduced += abs(after.modes[0]) < abs(before.modes[0])
        assert total > 0
        assert reduced >= 0.8 * total

    def test_spectral_bias(self, poisson_corrector, poisson_systems):
        matrix = mode_transfer(poisson_corrector, poisson_systems[:5], 10)
        assert matrix.n_cut() >= 3

    def test_interior_optimal_correction_period(self, poisson_corrector, poisson_systems):
        n_r_values = [2, 4, 6, 8, 12, 16, 25, 40]
        cfg = SolverConfig(kind=SolverKind.HINTS_JACOBI, max_iterations=2_000)
        result = rate_sweep(poisson_systems, poisson_corrector, n_r_values, cfg, threads=4)
        mean = result.mean
        best = int(np.argmax(mean))
        assert mean[best] > mean[0]
        assert mean[best] > mean[-1]

    @pytest.mark.parametrize("n", [15, 45, 60])
    def test_other_resolutions(self, poisson_corrector, n):
        systems = sampler(Equation.POISSON, uniform_interval(30)).systems(CASES, n=n)
        cfg = SolverConfig(kind=SolverKind.HINTS_JACOBI, n_r=25, max_iterations=4_000)
        traces = [hints_solve(s, cfg, poisson_corrector)[1] for s in systems]
        assert converged(traces) >= 15

    def test_hybrid_multigrid_on_fine_grid(self, poisson_corrector):
        systems = sampler(Equation.POISSON, uniform_interval(30)).systems(3, n=1024)
        cfg = SolverConfig(
            kind=SolverKind.HINTS_MG,
            relaxation="gs",
            levels=7,
            n_rl=10,
            n_r=10,
            max_cycles=15,
            tolerance=1e-10,
        )
        for system in systems:
            _, trace = hints_solve(system, cfg, poisson_corrector)
            assert trace.status is SolveStatus.CONVERGED


class TestHybridHelmholtz:
    def test_converges_where_jacobi_diverges(self, helmholtz_corrector, helmholtz_systems):
        jacobi = SolverConfig(kind=SolverKind.JACOBI, max_iterations=5_000)
        hybrid = SolverConfig(kind=SolverKind.HINTS_JACOBI, n_r=15, max_iterations=2_000)
        wins = 0
        for system in helmholtz_systems:
            _, plain = hints_solve(system, jacobi)
            _, mixed = hints_solve(system, hybrid, helmholtz_corrector)
            wins += (
                plain.status is SolveStatus.DIVERGED and mixed.status is SolveStatus.CONVERGED
            )
        assert wins >= 15


class TestHybridMultigrid2d:
    """Hybrid V-cycles on 2D Helmholtz, with a direct solve standing in for the network."""

    def test_converges_where_multigrid_fails(self):
        systems = sampler(Equation.HELMHOLTZ, uniform_square(32)).systems(10)
        cfg = SolverConfig(
            kind=SolverKind.HINTS_MG,
            levels=3,
            n_rl=10,
            n_r=10,
            max_cycles=30,
            tolerance=1e-10,
        )
        corrector = ExactCorrector()
        traces = [hints_solve(system, cfg, corrector)[1] for system in systems]
        assert converged(traces) == len(systems)
        assert max(trace.iterations for trace in traces) <= 2
