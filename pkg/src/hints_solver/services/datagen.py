from concurrent.futures import ThreadPoolExecutor

import numpy as np
from loguru import logger

from hints_solver.core.models import (
    Dataset,
    Equation,
    FloatArray,
    GrfConfig,
    Grid,
    LinearSystem,
    ProblemSpec,
)
from hints_solver.core.registry import ComponentRegistry
from hints_solver.infrastructure.linalg.dense import lu_solve
from hints_solver.infrastructure.sampling.grf import GaussianRandomField

GENERATOR = "philox/seedsequence(seed,(stream,index))"

# Streams of the training data and of the fresh test problems drawn for solves.
TRAIN_STREAMS = (0, 1)
TEST_STREAMS = (2, 3)


class ProblemSampler:
    """Draws problem instances: sample i uses GRF index i on one stream for k and one for f."""

    def __init__(
        self,
        equation: Equation,
        grid: Grid,
        grf_k: GrfConfig,
        grf_f: GrfConfig,
        seed: int,
        streams: tuple[int, int] = TRAIN_STREAMS,
    ) -> None:
        self.equation = equation
        self.grid = grid
        self.seed = seed
        self.streams = streams
        self.grf_k = grf_k.model_copy(update={"seed": seed})
        self.grf_f = grf_f.model_copy(update={"seed": seed})
        self._k_field = GaussianRandomField(grid, self.grf_k)
        self._f_field = GaussianRandomField(grid, self.grf_f)
        self._assembler = ComponentRegistry.get_assembler(equation, grid.kind)

    def problem(self, index: int) -> ProblemSpec:
        k = self._k_field.draw(index, self.streams[0])
        f = self._f_field.draw(index, self.streams[1])
        return ProblemSpec(self.equation, k, f)

    def assemble(self, problem: ProblemSpec, n: int | None = None) -> LinearSystem:
        return self._assembler(problem, n)

    def system(self, index: int, n: int | None = None) -> LinearSystem:
        return self.assemble(self.problem(index), n)

    def systems(self, count: int, n: int | None = None, start: int = 0) -> list[LinearSystem]:
        return [self.system(i, n) for i in range(start, start + count)]


class DataGenerationService:
    """Builds training datasets: GRF draws of k and f, u from a direct solve."""

    def __init__(self, sampler: ProblemSampler, threads: int = 1) -> None:
        self.sampler = sampler
        self.threads = max(threads, 1)

    def _triple(self, index: int) -> tuple[FloatArray, FloatArray, FloatArray]:
        problem = self.sampler.problem(index)
        system = self.sampler.assemble(problem)
        grid = problem.grid
        u = np.zeros(grid.n_nodes)
        u[grid.interior] = lu_solve(system.matrix.to_dense(), system.rhs)
        return problem.k_field.values, problem.f_field.values, u

    def generate(self, count: int) -> Dataset:
        grid = self.sampler.grid
        logger.info(
            "Generating {} {} samples on {} (n={}) with {} threads",
            count,
            self.sampler.equation,
            grid.kind,
            grid.subdivisions[0],
            self.threads,
        )
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            triples = list(pool.map(self._triple, range(count)))

        empty = np.zeros((0, grid.n_nodes))
        if triples:
            k, f, u = (np.array(column) for column in zip(*triples, strict=True))
        else:
            k, f, u = empty, empty.copy(), empty.copy()
        metadata: dict[str, object] = {
            "grf_k": self.sampler.grf_k.model_dump(),
            "grf_f": self.sampler.grf_f.model_dump(),
            "generator": GENERATOR,
            "streams": list(self.sampler.streams),
            "seed": self.sampler.seed,
        }
        return Dataset(self.sampler.equation, grid, k, f, u, metadata)
