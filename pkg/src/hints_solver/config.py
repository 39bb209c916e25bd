import os
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from hints_solver.core.errors import ConfigError
from hints_solver.core.models import (
    Domain,
    Equation,
    GrfConfig,
    Grid,
    GridKind,
    NetworkConfig,
    SolverConfig,
    TrainConfig,
)
from hints_solver.core.registry import ComponentRegistry
from hints_solver.infrastructure.discretization.grids import build_grid


class Settings(BaseSettings):
    """Process-wide settings read from HINTS_* environment variables or .env."""

    threads: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    log_level: str = "INFO"
    log_serialize: bool = False

    model_config = SettingsConfigDict(env_prefix="HINTS_", env_file=".env", extra="ignore")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProblemSection(_Section):
    """Problem family and discretization sizes (n for solves, n_d for the training grid)."""

    equation: Equation = Equation.POISSON
    domain: Domain = Domain.INTERVAL
    n: int = Field(30, ge=2)
    n_d: int = Field(30, ge=2)
    case: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_family(self) -> "ProblemSection":
        ComponentRegistry.get_grid_kind(self.equation, self.domain)
        return self

    @property
    def grid_kind(self) -> GridKind:
        return ComponentRegistry.get_grid_kind(self.equation, self.domain)

    def grid(self, n: int | None = None) -> Grid:
        return build_grid(self.grid_kind, n or self.n)

    def training_grid(self) -> Grid:
        return build_grid(self.grid_kind, self.n_d)


class DataSection(_Section):
    count: int = Field(1_000, ge=0)


class SweepSection(_Section):
    n_r_values: list[int] = Field(default_factory=lambda: [2, 4, 6, 8, 12, 16, 25, 40])
    cases: int = Field(20, gt=0)


class ModeTransferSection(_Section):
    n_modes: int = Field(15, gt=0)
    cases: int = Field(20, gt=0)
    exact: bool = False


class IoSection(_Section):
    seed: int
    out_dir: Path = Path("runs")
    dataset: Path | None = None
    model: Path | None = None
    sample_index: int | None = Field(None, ge=0)

    @property
    def dataset_path(self) -> Path:
        return self.dataset or self.out_dir / "dataset.hnts"

    @property
    def model_path(self) -> Path:
        return self.model or self.out_dir / "model.hnts"


class RunConfig(_Section):
    """One reproducible run: every section of a YAML run file."""

    problem: ProblemSection = Field(default_factory=ProblemSection)
    grf_k: GrfConfig | None = None
    grf_f: GrfConfig | None = None
    data: DataSection = Field(default_factory=DataSection)
    train: TrainConfig = Field(default_factory=TrainConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    sweep: SweepSection = Field(default_factory=SweepSection)
    mode_transfer: ModeTransferSection = Field(default_factory=ModeTransferSection)
    io: IoSection

    def coefficient_field(self) -> GrfConfig:
        return self.grf_k or GrfConfig.coefficient_defaults(
            self.problem.equation, self.problem.domain
        )

    def forcing_field(self) -> GrfConfig:
        return self.grf_f or GrfConfig.forcing_defaults()

    def seeded_network(self) -> NetworkConfig:
        return self.network.model_copy(update={"seed": self.io.seed})

    def seeded_train(self) -> TrainConfig:
        """Per-dimension schedule under the keys set in the train section, with the run seed."""
        explicit = self.train.model_dump(include=self.train.model_fields_set)
        dimension = 1 if self.problem.domain is Domain.INTERVAL else 2
        return TrainConfig.for_dimension(dimension, **(explicit | {"seed": self.io.seed}))


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    key = ".".join(str(part) for part in first["loc"])
    if first["type"] == "extra_forbidden":
        return f"Unknown configuration key '{key}'"
    if first["type"] == "missing":
        return f"Missing configuration key '{key}'"
    return f"Invalid value for '{key}': {first['msg']}"


def load_run_config(
    path: str | Path, seed: int | None = None, out_dir: str | Path | None = None
) -> RunConfig:
    """Reads a YAML run file; ``seed`` and ``out_dir`` override the io section."""
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Configuration file '{config_path}' not found")
    try:
        data: Any = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Configuration file '{config_path}' is not valid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Configuration file '{config_path}' must hold a mapping of sections")

    io = data.setdefault("io", {})
    if not isinstance(io, dict):
        raise ConfigError("Section 'io' must be a mapping")
    if seed is not None:
        io["seed"] = seed
    if out_dir is not None:
        io["out_dir"] = str(out_dir)

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_describe(e)) from e


# Global singleton instance
settings = Settings()
