"""Unit tests for the CSV mappers."""

import numpy as np
import polars as pl
import pytest

from hints_solver.core.models import (
    ModeTransferMatrix,
    RateSweepResult,
    SolveStatus,
    SolveTrace,
    StepKind,
    TraceRecord,
)
from hints_solver.infrastructure.discretization.grids import uniform_interval, uniform_square
from hints_solver.infrastructure.storage.mappers import (
    fmt,
    read_trace_csv,
    write_loading_vectors,
    write_loss_history,
    write_mode_matrix,
    write_sweep_cases,
    write_sweep_summary,
    write_trace_csv,
)


@pytest.fixture
def trace():
    trace = SolveTrace(tracked_modes=[1, 5], rhs_l2=2.0)
    trace.append(TraceRecord(index=0, step_kind=StepKind.INIT, res_l2=2.0))
    trace.append(
        TraceRecord(
            index=1, step_kind=StepKind.RELAX, res_l2=0.1, err_l2=1 / 3, modes=[0.5, -1e-9]
        )
    )
    trace.append(
        TraceRecord(
            index=2, step_kind=StepKind.DEEPONET, res_l2=1e-7, err_l2=2e-8, modes=[1e-8, 3e-9]
        )
    )
    return trace


class TestFmt:
    def test_seventeen_significant_digits(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert float(fmt(1 / 3)) == 1 / 3

    def test_special_values(self):
        assert fmt(float("-inf")) == "-inf"
        assert fmt(float("nan")) == "nan"


class TestTraceCsv:
    """Tests for trace export and re-import."""

    def test_header(self, trace, tmp_path):
        path = write_trace_csv(trace, tmp_path / "out" / "trace.csv")
        header = path.read_text().splitlines()[0]
        assert header == "iter,step_kind,res_l2,err_l2,mode_1,mode_5"

    def test_round_trip_is_exact(self, trace, tmp_path):
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        loaded = read_trace_csv(path, status=SolveStatus.CONVERGED)
        assert loaded.tracked_modes == [1, 5]
        assert loaded.status is SolveStatus.CONVERGED
        assert [r.model_dump() for r in loaded.records] == [
            r.model_dump() for r in trace.records
        ]

    def test_init_record_has_empty_error_cells(self, trace, tmp_path):
        path = write_trace_csv(trace, tmp_path / "trace.csv")
        second_line = path.read_text().splitlines()[1]
        assert second_line == "0,init,2,,,"

    def test_trace_without_modes(self, tmp_path):
        trace = SolveTrace()
        trace.append(TraceRecord(index=0, step_kind=StepKind.INIT, res_l2=1.0))
        trace.append(TraceRecord(index=1, step_kind=StepKind.VCYCLE, res_l2=0.25))
        frame = pl.read_csv(write_trace_csv(trace, tmp_path / "trace.csv"))
        assert frame.columns == ["iter", "step_kind", "res_l2", "err_l2"]
        assert frame["step_kind"].to_list() == ["init", "vcycle"]


class TestResultFiles:
    """Tests for loss, mode-transfer, loading-vector and sweep exports."""

    def test_loss_history(self, tmp_path):
        history = [
            {"epoch": 1, "train_loss": 2.0, "test_loss": 3.0, "learning_rate": 1e-3},
            {"epoch": 2, "train_loss": 1.0, "test_loss": float("nan"), "learning_rate": 5e-4},
        ]
        frame = pl.read_csv(write_loss_history(history, tmp_path / "loss.csv"))
        assert frame.columns == ["epoch", "train_loss", "test_loss", "learning_rate"]
        assert frame["epoch"].to_list() == [1, 2]
        assert frame["learning_rate"].to_list() == [1e-3, 5e-4]

    def test_mode_matrix(self, tmp_path):
        matrix = ModeTransferMatrix(np.array([[0.1, 0.2], [0.3, 0.4]]), sample_count=3)
        frame = pl.read_csv(write_mode_matrix(matrix, tmp_path / "modes.csv"))
        assert frame.columns == ["input_mode", "abs_coef_mode_1", "abs_coef_mode_2"]
        assert frame.row(1) == (2, 0.3, 0.4)

    def test_loading_vectors_1d(self, tmp_path):
        grid = uniform_interval(4)
        vectors = np.arange(6.0).reshape(3, 2)
        frame = pl.read_csv(write_loading_vectors(grid, vectors, tmp_path / "load.csv"))
        assert frame.columns == ["node", "x", "loading_1", "loading_2"]
        assert frame["node"].to_list() == [1, 2, 3]
        assert frame["x"].to_list() == [0.25, 0.5, 0.75]

    def test_loading_vectors_2d_has_both_coordinates(self, tmp_path):
        grid = uniform_square(2)
        frame = pl.read_csv(write_loading_vectors(grid, np.ones((1, 1)), tmp_path / "load.csv"))
        assert frame.columns == ["node", "x", "y", "loading_1"]
        assert frame.row(0) == (4, 0.5, 0.5, 1.0)

    def test_sweep_files(self, tmp_path):
        mu = np.array([[0.1, 0.3], [0.2, float("-inf")]])
        result = RateSweepResult([4, 8], mu)
        cases = pl.read_csv(write_sweep_cases(result, tmp_path / "cases.csv"))
        assert cases.columns == ["case", "mu_nr_4", "mu_nr_8", "best_n_r"]
        assert cases["best_n_r"].to_list() == [8, 4]

        summary = pl.read_csv(write_sweep_summary(result, tmp_path / "summary.csv"))
        assert summary.columns == ["n_r", "proportion", "mean_mu", "std_mu", "finite_cases"]
        assert summary["finite_cases"].to_list() == [2, 1]
        assert summary["mean_mu"].to_list() == pytest.approx([0.15, 0.3])
        assert summary["proportion"].to_list() == [0.25, 0.125]
