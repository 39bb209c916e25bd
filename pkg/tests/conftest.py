"""Pytest configuration and fixtures."""

from collections.abc import Callable

import numpy as np
import pytest
from loguru import logger

from hints_solver.core.models import (
    Equation,
    FieldSample,
    Grid,
    LinearSystem,
    ProblemSpec,
)
from hints_solver.core.registry import ComponentRegistry
from hints_solver.infrastructure.discretization.grids import (
    l_shaped,
    structured_triangulation,
    uniform_interval,
    uniform_square,
)


@pytest.fixture
def caplog(caplog):
    """Enable Loguru logging to be captured by pytest's caplog fixture."""
    import logging

    class PropagateHandler(logging.Handler):
        def emit(self, record):
            logging.getLogger(record.name).handle(record)

    handler_id = logger.add(PropagateHandler(), format="{message}")
    yield caplog
    logger.remove(handler_id)


ProblemFactory = Callable[..., ProblemSpec]
SystemFactory = Callable[..., LinearSystem]


@pytest.fixture
def make_problem() -> ProblemFactory:
    """Problem on a grid from constant values or callables of the node coordinates."""

    def _make(equation: Equation, grid: Grid, k=1.0, f=1.0) -> ProblemSpec:
        def _values(spec) -> np.ndarray:
            if callable(spec):
                return np.asarray(spec(grid.nodes), dtype=np.float64)
            return np.full(grid.n_nodes, float(spec))

        return ProblemSpec(
            Equation(equation),
            FieldSample(grid, _values(k)),
            FieldSample(grid, _values(f)),
        )

    return _make


@pytest.fixture
def make_system(make_problem) -> SystemFactory:
    """Assembled system of a problem, through the registry."""

    def _make(equation: Equation, grid: Grid, k=1.0, f=1.0) -> LinearSystem:
        problem = make_problem(equation, grid, k, f)
        return ComponentRegistry.get_assembler(problem.equation, grid.kind)(problem)

    return _make


@pytest.fixture
def poisson_1d(make_system) -> LinearSystem:
    """1D Poisson, k = 1 + 0.5 sin(2 pi x), f = 1, n = 30."""
    return make_system(
        Equation.POISSON,
        uniform_interval(30),
        k=lambda x: 1.0 + 0.5 * np.sin(2 * np.pi * x[:, 0]),
        f=1.0,
    )


@pytest.fixture
def helmholtz_1d(make_system) -> LinearSystem:
    """1D Helmholtz with constant k = 8 on n = 30: an indefinite system."""
    return make_system(Equation.HELMHOLTZ, uniform_interval(30), k=8.0, f=1.0)


@pytest.fixture
def grids() -> dict[str, Grid]:
    return {
        "interval": uniform_interval(8),
        "square": uniform_square(8),
        "l-shape": l_shaped(8),
        "square-triangulation": structured_triangulation(8, notch=False),
    }
