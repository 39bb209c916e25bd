"""Polars mappings between result objects and CSV files.

Floats are written with 17 significant digits so every float64 reads back exactly.
"""

from pathlib import Path
from typing import Any

import numpy as np
import polars as pl

from hints_solver.core.models import (
    FloatArray,
    Grid,
    ModeTransferMatrix,
    RateSweepResult,
    SolveStatus,
    SolveTrace,
    StepKind,
    TraceRecord,
)


def fmt(value: float) -> str:
    return f"{float(value):.17g}"


def _fmt_column(values: Any) -> list[str | None]:
    """Formatted cells; None stays null and is written as an empty field."""
    return [None if v is None else fmt(v) for v in values]


def write_frame(frame: pl.DataFrame, path: str | Path) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.write_csv(target)
    return target


# -- solve traces ---------------------------------------------------------------------


def trace_to_frame(trace: SolveTrace) -> pl.DataFrame:
    records = trace.records
    columns: dict[str, list[Any]] = {
        "iter": [r.index for r in records],
        "step_kind": [r.step_kind.value for r in records],
        "res_l2": _fmt_column(r.res_l2 for r in records),
        "err_l2": _fmt_column(r.err_l2 for r in records),
    }
    for position, mode in enumerate(trace.tracked_modes):
        columns[f"mode_{mode}"] = _fmt_column(
            r.modes[position] if r.modes else None for r in records
        )
    return pl.DataFrame(columns)


def write_trace_csv(trace: SolveTrace, path: str | Path) -> Path:
    return write_frame(trace_to_frame(trace), path)


def read_trace_csv(
    path: str | Path, status: SolveStatus = SolveStatus.MAX_ITERATIONS
) -> SolveTrace:
    frame = pl.read_csv(path, infer_schema=False)
    mode_columns = [c for c in frame.columns if c.startswith("mode_")]
    tracked = [int(c.removeprefix("mode_")) for c in mode_columns]
    trace = SolveTrace(tracked_modes=tracked, status=status)

    def _float(text: str | None) -> float | None:
        return float(text) if text else None

    for row in frame.iter_rows(named=True):
        modes = [_float(row[c]) for c in mode_columns]
        trace.append(
            TraceRecord(
                index=int(row["iter"]),
                step_kind=StepKind(row["step_kind"]),
                res_l2=float(row["res_l2"]),
                err_l2=_float(row["err_l2"]),
                modes=[m for m in modes if m is not None],
            )
        )
    return trace


# -- training ---------------------------------------------------------------------------


def write_loss_history(history: list[dict[str, float]], path: str | Path) -> Path:
    frame = pl.DataFrame(
        {
            "epoch": [int(h["epoch"]) for h in history],
            "train_loss": _fmt_column(h["train_loss"] for h in history),
            "test_loss": _fmt_column(h["test_loss"] for h in history),
            "learning_rate": _fmt_column(h["learning_rate"] for h in history),
        }
    )
    return write_frame(frame, path)


# -- analysis ---------------------------------------------------------------------------


def write_mode_matrix(matrix: ModeTransferMatrix, path: str | Path) -> Path:
    """Rows are input modes; cells are absolute output-error coefficients."""
    n = matrix.n_modes
    columns: dict[str, list[Any]] = {"input_mode": list(range(1, n + 1))}
    for i in range(n):
        columns[f"abs_coef_mode_{i + 1}"] = _fmt_column(matrix.entries[:, i])
    return write_frame(pl.DataFrame(columns), path)


def write_loading_vectors(grid: Grid, vectors: FloatArray, path: str | Path) -> Path:
    """One row per interior node: coordinates, then ``A phi_i / |A phi_i|`` per mode."""
    nodes = grid.interior_nodes
    columns: dict[str, list[Any]] = {"node": grid.interior.tolist()}
    for axis, name in enumerate("xy"[: grid.dimension]):
        columns[name] = _fmt_column(nodes[:, axis])
    for j in range(vectors.shape[1]):
        columns[f"loading_{j + 1}"] = _fmt_column(vectors[:, j])
    return write_frame(pl.DataFrame(columns), path)


def write_sweep_cases(result: RateSweepResult, path: str | Path) -> Path:
    columns: dict[str, list[Any]] = {"case": list(range(result.case_count))}
    for position, n_r in enumerate(result.n_r_values):
        columns[f"mu_nr_{n_r}"] = _fmt_column(result.mu[:, position])
    columns["best_n_r"] = result.best_n_r
    return write_frame(pl.DataFrame(columns), path)


def write_sweep_summary(result: RateSweepResult, path: str | Path) -> Path:
    finite = np.isfinite(result.mu).sum(axis=0)
    frame = pl.DataFrame(
        {
            "n_r": result.n_r_values,
            "proportion": _fmt_column(1.0 / np.asarray(result.n_r_values, dtype=np.float64)),
            "mean_mu": _fmt_column(result.mean),
            "std_mu": _fmt_column(result.std),
            "finite_cases": finite.tolist(),
        }
    )
    return write_frame(frame, path)
