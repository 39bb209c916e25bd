"""Integration tests for CLI commands."""

from pathlib import Path

import numpy as np
import polars as pl
import pytest
from typer.testing import CliRunner

from hints_solver.cli import app
from hints_solver.infrastructure.storage.containers import load_dataset, load_model
from hints_solver.infrastructure.storage.mappers import read_trace_csv

runner = CliRunner()

SMALL_RUN = """\
problem:
  equation: poisson
  domain: interval
  n: 16
  n_d: 16
data:
  count: 24
train:
  epochs: 3
  batch_size: 8
network:
  branch_widths: [12, 10]
  trunk_widths: [10, 10]
solver:
  kind: hints-jacobi
  n_r: 4
  max_iterations: 300
sweep:
  n_r_values: [2, 4]
  cases: 2
mode_transfer:
  n_modes: 4
  cases: 2
io:
  seed: 5
"""


def write_config(tmp_path: Path, text: str = SMALL_RUN, name: str = "run.yaml") -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


def invoke(command: str, config: Path, out: Path, *extra: str):
    return runner.invoke(app, [command, "--config", str(config), "--out", str(out), *extra])


class TestPipeline:
    """End-to-end run of every command on a small 1D Poisson problem."""

    @pytest.fixture
    def trained(self, tmp_path):
        config = write_config(tmp_path)
        out = tmp_path / "run"
        assert invoke("gen-data", config, out).exit_code == 0
        assert invoke("train", config, out).exit_code == 0
        return config, out

    def test_gen_data_and_train(self, trained):
        _, out = trained
        dataset = load_dataset(out / "dataset.hnts")
        assert dataset.count == 24
        assert dataset.metadata["seed"] == 5

        model = load_model(out / "model.hnts")
        assert model.grid.matches(dataset.grid)
        assert model.alpha == 0.0

        history = pl.read_csv(out / "loss_history.csv")
        assert history["epoch"].to_list() == [1, 2, 3]

    def test_solve(self, trained):
        config, out = trained
        result = invoke("solve", config, out)
        assert result.exit_code == 0, result.output

        trace = read_trace_csv(out / "trace.csv")
        kinds = [r.step_kind.value for r in trace.records]
        assert kinds[0] == "init"
        assert kinds[4] == "deeponet"
        assert np.load(out / "solution.npy").shape == (15,)

    def test_solve_dataset_sample(self, tmp_path, trained):
        config, out = trained
        text = SMALL_RUN.replace("  seed: 5\n", "  seed: 5\n  sample_index: 3\n")
        result = invoke("solve", write_config(tmp_path, text, "sample.yaml"), out)
        assert result.exit_code == 0, result.output

    def test_sweep(self, trained):
        config, out = trained
        assert invoke("sweep", config, out).exit_code == 0
        cases = pl.read_csv(out / "sweep_cases.csv")
        assert cases.columns == ["case", "mu_nr_2", "mu_nr_4", "best_n_r"]
        assert cases.height == 2
        summary = pl.read_csv(out / "sweep_summary.csv")
        assert summary["n_r"].to_list() == [2, 4]

    def test_mode_transfer_with_model(self, trained):
        config, out = trained
        assert invoke("mode-transfer", config, out).exit_code == 0
        assert pl.read_csv(out / "mode_transfer.csv").shape == (4, 5)


class TestStandaloneCommands:
    """Commands that need no trained model."""

    def test_exact_mode_transfer(self, tmp_path):
        out = tmp_path / "run"
        result = invoke("mode-transfer", write_config(tmp_path), out, "--exact")
        assert result.exit_code == 0, result.output

        matrix = pl.read_csv(out / "mode_transfer.csv").drop("input_mode").to_numpy()
        assert matrix.shape == (4, 4)
        assert np.all(matrix <= 1e-10)
        loading = pl.read_csv(out / "loading_vectors.csv")
        assert loading.columns == ["node", "x", "loading_1", "loading_2", "loading_3", "loading_4"]
        assert loading.height == 15

    def test_classical_solve(self, tmp_path):
        text = SMALL_RUN.replace("kind: hints-jacobi", "kind: gs")
        out = tmp_path / "run"
        result = invoke("solve", write_config(tmp_path, text), out)
        assert result.exit_code == 0, result.output
        trace = read_trace_csv(out / "trace.csv")
        assert {r.step_kind.value for r in trace.records[1:]} == {"relax"}

    def test_deterministic_artifacts(self, tmp_path):
        config = write_config(tmp_path)
        first, second = tmp_path / "first", tmp_path / "second"
        for out in (first, second):
            assert invoke("gen-data", config, out).exit_code == 0
            assert invoke("train", config, out).exit_code == 0
            assert invoke("solve", config, out).exit_code == 0
        for name in ("dataset.hnts", "model.hnts", "loss_history.csv", "trace.csv"):
            assert (first / name).read_bytes() == (second / name).read_bytes()
        np.testing.assert_array_equal(
            np.load(first / "solution.npy"), np.load(second / "solution.npy")
        )

    def test_run_log_in_out_dir(self, tmp_path):
        out = tmp_path / "run"
        assert invoke("gen-data", write_config(tmp_path), out).exit_code == 0
        text = (out / "hints.log").read_text()
        assert "Wrote 24 samples" in text
        assert "| SUCCESS  |" in text

    def test_seed_override_changes_data(self, tmp_path):
        config = write_config(tmp_path)
        assert invoke("gen-data", config, tmp_path / "a").exit_code == 0
        assert invoke("gen-data", config, tmp_path / "b", "--seed", "6").exit_code == 0
        a = load_dataset(tmp_path / "a" / "dataset.hnts")
        b = load_dataset(tmp_path / "b" / "dataset.hnts")
        assert not np.array_equal(a.k, b.k)


class TestExitCodes:
    """Exit status of failing commands."""

    def test_unknown_key(self, tmp_path):
        config = write_config(tmp_path, SMALL_RUN + "  bogus: 1\n")
        result = invoke("gen-data", config, tmp_path / "run")
        assert result.exit_code == 1
        assert "io.bogus" in result.output

    def test_missing_config_file(self, tmp_path):
        result = invoke("solve", tmp_path / "absent.yaml", tmp_path / "run")
        assert result.exit_code == 1

    def test_missing_model(self, tmp_path):
        result = invoke("solve", write_config(tmp_path), tmp_path / "run")
        assert result.exit_code == 1

    def test_sample_index_out_of_range(self, tmp_path):
        config = write_config(tmp_path, SMALL_RUN.replace("kind: hints-jacobi", "kind: jacobi"))
        out = tmp_path / "run"
        assert invoke("gen-data", config, out).exit_code == 0
        text = SMALL_RUN.replace("kind: hints-jacobi", "kind: jacobi") + "  sample_index: 99\n"
        result = invoke("solve", write_config(tmp_path, text, "bad.yaml"), out)
        assert result.exit_code == 1

    def test_diverged_helmholtz_jacobi(self, tmp_path):
        text = """\
problem:
  equation: helmholtz
  domain: interval
  n: 30
solver:
  kind: jacobi
  max_iterations: 5000
  divergence_factor: 1.0e6
io:
  seed: 2
"""
        out = tmp_path / "run"
        result = invoke("solve", write_config(tmp_path, text), out)
        assert result.exit_code == 2
        trace = read_trace_csv(out / "trace.csv")
        assert trace.records[-1].res_l2 > 1e6 * trace.records[0].res_l2

    def test_multigrid_on_odd_resolution(self, tmp_path):
        text = SMALL_RUN.replace("  n: 16\n", "  n: 15\n").replace(
            "kind: hints-jacobi", "kind: mg\n  levels: 2"
        )
        result = invoke("solve", write_config(tmp_path, text), tmp_path / "run")
        assert result.exit_code == 1
        assert "odd subdivision count" in result.output

    def test_l_shape_on_odd_resolution(self, tmp_path):
        text = SMALL_RUN.replace("domain: interval", "domain: l-shape").replace(
            "  n: 16\n", "  n: 15\n"
        )
        result = invoke("mode-transfer", write_config(tmp_path, text), tmp_path / "run", "--exact")
        assert result.exit_code == 1
        assert "must be even" in result.output
