"""Gaussian random fields with squared-exponential covariance.

Sample ``i`` of stream ``s`` is drawn from a Philox generator keyed by
``SeedSequence(cfg.seed, spawn_key=(s, i))``, so any index range can be regenerated
independently and in any order.
"""

import numpy as np
from loguru import logger

from hints_solver.core.errors import CovarianceNotFactorizable, RejectionBudgetExceeded
from hints_solver.core.models import FieldSample, FloatArray, GrfConfig, Grid

JITTER = 1e-10
REJECTION_BUDGET = 1000


def covariance_matrix(grid: Grid, cfg: GrfConfig) -> FloatArray:
    """``sigma^2 exp(-|x_i - x_j|^2 / (2 l^2))`` over all grid nodes."""
    nodes = grid.nodes
    diff = nodes[:, None, :] - nodes[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    return cfg.sigma**2 * np.exp(-dist2 / (2.0 * cfg.length_scale**2))


def generator_for(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(sequence))


class GaussianRandomField:
    """Cholesky sampler bound to one grid and one parameter set."""

    def __init__(self, grid: Grid, cfg: GrfConfig) -> None:
        self.grid = grid
        self.cfg = cfg
        self._factor: FloatArray | None = None
        if cfg.sigma > 0.0:
            cov = covariance_matrix(grid, cfg) + JITTER * np.eye(grid.n_nodes)
            try:
                self._factor = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as e:
                raise CovarianceNotFactorizable(
                    f"Covariance on {grid.n_nodes} nodes (l={cfg.length_scale}) is not "
                    "positive definite even with jitter"
                ) from e

    def draw(self, index: int, stream: int = 0) -> FieldSample:
        mean = np.full(self.grid.n_nodes, self.cfg.mean)
        if self._factor is None:
            return FieldSample(self.grid, mean)

        rng = generator_for(self.cfg.seed, index, stream)
        k_min = self.cfg.k_min
        for attempt in range(REJECTION_BUDGET):
            values = mean + self._factor @ rng.standard_normal(self.grid.n_nodes)
            if k_min is None or values.min() > k_min:
                if attempt:
                    logger.debug("Sample {} accepted after {} rejections", index, attempt)
                return FieldSample(self.grid, values)
        raise RejectionBudgetExceeded(
            f"Sample {index}: {REJECTION_BUDGET} consecutive draws fell below k_min={k_min}"
        )

    def sample(self, count: int, start_index: int = 0, stream: int = 0) -> list[FieldSample]:
        return [self.draw(i, stream) for i in range(start_index, start_index + count)]


def sample(
    grid: Grid, cfg: GrfConfig, count: int, start_index: int = 0, stream: int = 0
) -> list[FieldSample]:
    """Draws ``count`` fields; deterministic in (cfg.seed, stream, index)."""
    return GaussianRandomField(grid, cfg).sample(count, start_index, stream)
