"""Unit tests for the model and dataset containers."""

import struct
import zlib

import numpy as np
import pytest

from hints_solver.core.errors import CorruptChecksum, DimensionMismatch, FormatVersionMismatch
from hints_solver.core.models import Dataset, Equation, FieldSample, NetworkConfig
from hints_solver.infrastructure.discretization.grids import uniform_interval, uniform_square
from hints_solver.infrastructure.network.deeponet import DeepOnetModel
from hints_solver.infrastructure.storage.containers import (
    DATASET_MAGIC,
    MODEL_MAGIC,
    decode_container,
    encode_container,
    load_dataset,
    load_model,
    save_dataset,
    save_model,
)


@pytest.fixture
def model_1d():
    cfg = NetworkConfig(branch_widths=[6, 5], trunk_widths=[5, 5], seed=2)
    return DeepOnetModel.build(uniform_interval(8), cfg, alpha=1.0)


@pytest.fixture
def model_2d():
    cfg = NetworkConfig(branch_widths=[5], trunk_widths=[5, 5], conv_channels=[3, 4], seed=2)
    return DeepOnetModel.build(uniform_square(6), cfg, alpha=2.0)


@pytest.fixture
def dataset():
    grid = uniform_interval(6)
    rng = np.random.default_rng(0)
    k, f, u = (rng.standard_normal((4, grid.n_nodes)) for _ in range(3))
    return Dataset(Equation.HELMHOLTZ, grid, k, f, u, {"seed": 7, "streams": [0, 1]})


class TestContainerCodec:
    """Tests for the shared header/metadata/payload/trailer layout."""

    def test_header_fields(self):
        data = encode_container(MODEL_MAGIC, {"b": 1, "a": 2}, np.arange(3.0))
        magic, version, meta_len = struct.unpack_from("<8sII", data)
        assert magic == MODEL_MAGIC and version == 1
        assert data[16 : 16 + meta_len].decode() == "a: 2\nb: 1\n"
        assert len(data) == 16 + meta_len + 3 * 8 + 4

    def test_decode_returns_payload(self):
        meta, payload = decode_container(
            encode_container(DATASET_MAGIC, {"x": [1, 2]}, np.array([1.5, -2.0])), DATASET_MAGIC
        )
        assert meta == {"x": [1, 2]}
        np.testing.assert_array_equal(payload, [1.5, -2.0])

    def test_flipped_byte_fails_checksum(self):
        data = bytearray(encode_container(MODEL_MAGIC, {}, np.ones(4)))
        data[20] ^= 0xFF
        with pytest.raises(CorruptChecksum):
            decode_container(bytes(data), MODEL_MAGIC)

    def test_truncated_fails_checksum(self):
        data = encode_container(MODEL_MAGIC, {}, np.ones(4))
        with pytest.raises(CorruptChecksum):
            decode_container(data[:-9], MODEL_MAGIC)
        with pytest.raises(CorruptChecksum):
            decode_container(data[:5], MODEL_MAGIC)

    def test_wrong_magic(self):
        data = encode_container(DATASET_MAGIC, {}, np.ones(2))
        with pytest.raises(FormatVersionMismatch):
            decode_container(data, MODEL_MAGIC)

    def test_future_version_with_valid_checksum(self):
        body = bytearray(encode_container(MODEL_MAGIC, {}, np.ones(2))[:-4])
        struct.pack_into("<I", body, 8, 2)
        data = bytes(body) + struct.pack("<I", zlib.crc32(bytes(body)))
        with pytest.raises(FormatVersionMismatch, match="version 2"):
            decode_container(data, MODEL_MAGIC)


class TestModelContainer:
    """Tests for saving and loading DeepONet models."""

    @pytest.mark.parametrize("name", ["model_1d", "model_2d"])
    def test_save_load_save_is_byte_identical(self, name, request, tmp_path):
        model = request.getfixturevalue(name)
        first, second = tmp_path / "a.hnts", tmp_path / "b.hnts"
        save_model(model, first)
        save_model(load_model(first), second)
        assert first.read_bytes() == second.read_bytes()

    @pytest.mark.parametrize("name", ["model_1d", "model_2d"])
    def test_loaded_model_predicts_identically(self, name, request, tmp_path):
        model = request.getfixturevalue(name)
        save_model(model, tmp_path / "model.hnts")
        loaded = load_model(tmp_path / "model.hnts")

        grid = model.grid
        rng = np.random.default_rng(3)
        k = FieldSample(grid, 1.0 + 0.2 * rng.random(grid.n_nodes))
        f = FieldSample(grid, rng.standard_normal(grid.n_nodes))
        np.testing.assert_array_equal(
            loaded.forward(k, f, grid.nodes), model.forward(k, f, grid.nodes)
        )
        assert loaded.alpha == model.alpha
        assert loaded.mask is model.mask

    def test_metadata_describes_layers(self, model_2d, tmp_path):
        save_model(model_2d, tmp_path / "model.hnts")
        meta, payload = decode_container((tmp_path / "model.hnts").read_bytes(), MODEL_MAGIC)
        assert meta["grid"] == {"kind": "uniform-square", "subdivisions": [6, 6]}
        assert meta["parameter_count"] == payload.shape[0]
        assert [layer["kind"] for layer in meta["layers"]][:3] == [
            "conv2d",
            "conv2d",
            "global-average-pool",
        ]

    def test_dataset_file_is_not_a_model(self, dataset, tmp_path):
        save_dataset(dataset, tmp_path / "data.hnts")
        with pytest.raises(FormatVersionMismatch):
            load_model(tmp_path / "data.hnts")

    def test_truncated_file(self, model_1d, tmp_path):
        path = tmp_path / "model.hnts"
        save_model(model_1d, path)
        path.write_bytes(path.read_bytes()[:-100])
        with pytest.raises(CorruptChecksum):
            load_model(path)

    def test_short_payload(self, model_1d, tmp_path):
        path = tmp_path / "model.hnts"
        meta = model_1d.describe()
        path.write_bytes(
            encode_container(MODEL_MAGIC, meta, np.zeros(model_1d.parameter_count - 1))
        )
        with pytest.raises(DimensionMismatch):
            load_model(path)


class TestDatasetContainer:
    """Tests for saving and loading training datasets."""

    def test_round_trip(self, dataset, tmp_path):
        save_dataset(dataset, tmp_path / "data.hnts")
        loaded = load_dataset(tmp_path / "data.hnts")
        assert loaded.equation is Equation.HELMHOLTZ
        assert loaded.grid.matches(dataset.grid)
        for name in ("k", "f", "u"):
            np.testing.assert_array_equal(getattr(loaded, name), getattr(dataset, name))
        assert loaded.metadata == {"seed": 7, "streams": [0, 1]}

    def test_empty_dataset(self, tmp_path):
        grid = uniform_interval(4)
        empty = np.zeros((0, grid.n_nodes))
        save_dataset(Dataset(Equation.POISSON, grid, empty, empty, empty), tmp_path / "e.hnts")
        loaded = load_dataset(tmp_path / "e.hnts")
        assert loaded.count == 0
        assert loaded.k.shape == (0, 5)

    def test_payload_must_match_count(self, dataset, tmp_path):
        meta = {
            "equation": "helmholtz",
            "grid": dataset.grid.describe(),
            "count": 5,
            "nodes": dataset.grid.n_nodes,
            "arrays": ["k", "f", "u"],
        }
        path = tmp_path / "data.hnts"
        payload = np.zeros(3 * 4 * dataset.grid.n_nodes)
        path.write_bytes(encode_container(DATASET_MAGIC, meta, payload))
        with pytest.raises(DimensionMismatch):
            load_dataset(path)
