import sys
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated

import click
import numpy as np
import typer
from loguru import logger

from hints_solver.config import RunConfig, load_run_config, settings
from hints_solver.core.errors import (
    ConfigError,
    GridMismatch,
    HintsError,
    NumericalFailure,
    SolveDiverged,
)
from hints_solver.core.models import FieldSample, ProblemSpec, SolveStatus
from hints_solver.core.ports import ICorrectionOperator
from hints_solver.infrastructure.network.deeponet import DeepOnetModel
from hints_solver.infrastructure.storage.containers import (
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)
from hints_solver.infrastructure.storage.mappers import (
    write_loading_vectors,
    write_loss_history,
    write_mode_matrix,
    write_sweep_cases,
    write_sweep_summary,
    write_trace_csv,
)
from hints_solver.logger import configure_logger, log_to_run_dir
from hints_solver.services.analysis import loading_vectors, mode_transfer, rate_sweep
from hints_solver.services.datagen import TEST_STREAMS, DataGenerationService, ProblemSampler
from hints_solver.services.solver import DeepOnetCorrector, ExactCorrector, SolverService
from hints_solver.services.training import TrainingService

app = typer.Typer(
    help="hints: hybrid relaxation / DeepONet solvers for Poisson and Helmholtz problems",
    no_args_is_help=True,
    rich_markup_mode=None,
)

ConfigOption = Annotated[
    Path, typer.Option("--config", "-c", help="Path to the YAML run configuration.")
]
SeedOption = Annotated[
    int | None, typer.Option("--seed", help="Override io.seed from the run configuration.")
]
OutOption = Annotated[
    Path | None, typer.Option("--out", "-o", help="Override io.out_dir for written artifacts.")
]


def version_callback(value: bool) -> None:
    if value:
        from hints_solver import __version__

        typer.echo(f"hints-solver version: {__version__}")
        raise typer.Exit()


@app.callback()
def callback(
    version: Annotated[
        bool | None,
        typer.Option(
            "--version",
            "-v",
            help="Show the version and exit.",
            callback=version_callback,
            is_eager=True,
        ),
    ] = None,
) -> None:
    """hints: reproducible data generation, training, solves and spectral analyses."""
    configure_logger(level=settings.log_level, serialize=settings.log_serialize)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Maps numerical failures to exit code 2 and every other domain or I/O error to 1."""
    try:
        yield
    except NumericalFailure as e:
        logger.error("{}: {}", type(e).__name__, e)
        typer.echo(f"Numerical failure: {e}", err=True)
        raise typer.Exit(code=2) from e
    except (HintsError, OSError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=1) from e


def _load(config: Path, seed: int | None, out: Path | None) -> RunConfig:
    """Reads the run configuration and starts logging into its output directory."""
    cfg = load_run_config(config, seed, out)
    path = log_to_run_dir(cfg.io.out_dir, settings.log_level)
    logger.debug("Logging to {}", path)
    return cfg


def _sampler(cfg: RunConfig, streams: tuple[int, int] = TEST_STREAMS) -> ProblemSampler:
    return ProblemSampler(
        cfg.problem.equation,
        cfg.problem.grid(),
        cfg.coefficient_field(),
        cfg.forcing_field(),
        cfg.io.seed,
        streams,
    )


def _deeponet(cfg: RunConfig) -> DeepOnetCorrector:
    path = cfg.io.model_path
    logger.info("Loading model from {}", path)
    return DeepOnetCorrector(load_model(path))


@app.command("gen-data")
def gen_data(config: ConfigOption, seed: SeedOption = None, out: OutOption = None) -> None:
    """Samples k and f from Gaussian random fields and solves for u on the training grid."""
    with _exit_codes():
        cfg = _load(config, seed, out)
        sampler = ProblemSampler(
            cfg.problem.equation,
            cfg.problem.training_grid(),
            cfg.coefficient_field(),
            cfg.forcing_field(),
            cfg.io.seed,
        )
        dataset = DataGenerationService(sampler, settings.threads).generate(cfg.data.count)
        path = cfg.io.dataset_path
        save_dataset(dataset, path)
        logger.success("Wrote {} samples to {}", dataset.count, path)


@app.command()
def train(config: ConfigOption, seed: SeedOption = None, out: OutOption = None) -> None:
    """Trains a DeepONet on a generated dataset and writes the model and its loss history."""
    with _exit_codes():
        cfg = _load(config, seed, out)
        dataset = load_dataset(cfg.io.dataset_path)
        grid = cfg.problem.training_grid()
        if not dataset.grid.matches(grid):
            raise GridMismatch(
                f"Dataset grid {dataset.grid.kind} n={dataset.grid.subdivisions[0]} does not "
                f"match problem.n_d={cfg.problem.n_d}"
            )

        train_cfg = cfg.seeded_train()
        alpha = train_cfg.loss_exponent(dataset.equation, grid.dimension)
        model = DeepOnetModel.build(dataset.grid, cfg.seeded_network(), alpha)
        outcome = TrainingService(train_cfg).run(model, dataset)

        model_path = cfg.io.model_path
        save_model(outcome.model, model_path)
        history_path = write_loss_history(outcome.history, cfg.io.out_dir / "loss_history.csv")
        logger.success("Wrote model to {} and loss history to {}", model_path, history_path)


@app.command()
def solve(config: ConfigOption, seed: SeedOption = None, out: OutOption = None) -> None:
    """Solves one problem instance and writes the residual trace and the solution vector."""
    with _exit_codes():
        cfg = _load(config, seed, out)
        kind = cfg.solver.kind
        corrector: ICorrectionOperator | None = None
        if kind.is_hybrid or (cfg.solver.deeponet_init and not kind.is_multigrid):
            corrector = _deeponet(cfg)

        if cfg.io.sample_index is not None:
            dataset = load_dataset(cfg.io.dataset_path)
            row = cfg.io.sample_index
            if row >= dataset.count:
                raise ConfigError(
                    f"io.sample_index={row} is outside a dataset of {dataset.count} samples"
                )
            problem = ProblemSpec(
                dataset.equation,
                FieldSample(dataset.grid, dataset.k[row].copy()),
                FieldSample(dataset.grid, dataset.f[row].copy()),
            )
            logger.info("Solving dataset sample {} at n={}", row, cfg.problem.n)
        else:
            problem = _sampler(cfg).problem(cfg.problem.case)
            logger.info("Solving test case {} at n={}", cfg.problem.case, cfg.problem.n)

        outcome = SolverService(cfg.solver, corrector).solve(problem, cfg.problem.n)
        out_dir = cfg.io.out_dir
        trace_path = write_trace_csv(outcome.trace, out_dir / "trace.csv")
        out_dir.mkdir(parents=True, exist_ok=True)
        np.save(out_dir / "solution.npy", outcome.solution)

        trace = outcome.trace
        if trace.status is SolveStatus.DIVERGED:
            raise SolveDiverged(f"{kind} diverged after {trace.iterations} steps")
        logger.success(
            "{} {} after {} steps; trace written to {}",
            kind,
            trace.status,
            trace.iterations,
            trace_path,
        )


@app.command()
def sweep(config: ConfigOption, seed: SeedOption = None, out: OutOption = None) -> None:
    """Convergence rate of the hybrid solver over DeepONet periods n_r on fresh test cases."""
    with _exit_codes():
        cfg = _load(config, seed, out)
        corrector = _deeponet(cfg)
        systems = _sampler(cfg).systems(cfg.sweep.cases)
        result = rate_sweep(
            systems, corrector, cfg.sweep.n_r_values, cfg.solver, threads=settings.threads
        )

        write_sweep_cases(result, cfg.io.out_dir / "sweep_cases.csv")
        summary = write_sweep_summary(result, cfg.io.out_dir / "sweep_summary.csv")
        best = cfg.sweep.n_r_values[int(np.argmax(result.mean))]
        logger.success("Best mean rate at n_r={}; summary written to {}", best, summary)


@app.command("mode-transfer")
def mode_transfer_cmd(
    config: ConfigOption,
    seed: SeedOption = None,
    out: OutOption = None,
    exact: Annotated[
        bool,
        typer.Option("--exact", help="Use a direct solve instead of the trained model."),
    ] = False,
) -> None:
    """Per-mode error of the corrector on pure eigenmode inputs, plus loading vectors."""
    with _exit_codes():
        cfg = _load(config, seed, out)
        corrector: ICorrectionOperator = (
            ExactCorrector() if exact or cfg.mode_transfer.exact else _deeponet(cfg)
        )
        systems = _sampler(cfg).systems(cfg.mode_transfer.cases)
        n_modes = min(cfg.mode_transfer.n_modes, systems[0].size)
        matrix = mode_transfer(corrector, systems, n_modes)

        out_dir = cfg.io.out_dir
        path = write_mode_matrix(matrix, out_dir / "mode_transfer.csv")
        write_loading_vectors(
            systems[0].grid,
            loading_vectors(systems[0], n_modes),
            out_dir / "loading_vectors.csv",
        )
        logger.success(
            "{} corrector reduces modes 1..{}; matrix written to {}",
            corrector.name,
            matrix.n_cut(),
            path,
        )


def main() -> None:
    """Console entry point: 0 on success, 1 on usage errors, 2 on numerical failures."""
    try:
        result = app(standalone_mode=False)
    except click.UsageError as e:
        e.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    sys.exit(result if isinstance(result, int) else 0)


if __name__ == "__main__":
    main()
