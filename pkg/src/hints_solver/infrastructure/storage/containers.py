"""Versioned binary containers for trained models and generated datasets.

Layout: 8 magic bytes, uint32 LE version, uint32 LE metadata length, sorted-key YAML
metadata, float64 LE payload, uint32 LE CRC-32 of every preceding byte.
"""

import struct
import zlib
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from hints_solver.core.errors import CorruptChecksum, DimensionMismatch, FormatVersionMismatch
from hints_solver.core.models import Dataset, Equation, FloatArray, MaskKind
from hints_solver.infrastructure.discretization.grids import build_grid
from hints_solver.infrastructure.network.deeponet import DeepOnetModel
from hints_solver.infrastructure.network.layers import Activation, Conv2d, Dense

MODEL_MAGIC = b"HNTSMD1\x00"
DATASET_MAGIC = b"HNTSDS1\x00"
VERSION = 1
_HEADER = struct.Struct("<8sII")
_TRAILER = struct.Struct("<I")
_DATASET_KEYS = ("equation", "grid", "count", "nodes", "arrays")


def encode_container(magic: bytes, metadata: dict[str, Any], payload: FloatArray) -> bytes:
    meta = yaml.safe_dump(metadata, sort_keys=True).encode("utf-8")
    body = (
        _HEADER.pack(magic, VERSION, len(meta))
        + meta
        + np.ascontiguousarray(payload, dtype="<f8").tobytes()
    )
    return body + _TRAILER.pack(zlib.crc32(body))


def decode_container(data: bytes, magic: bytes) -> tuple[dict[str, Any], FloatArray]:
    if len(data) < _HEADER.size + _TRAILER.size:
        raise CorruptChecksum(f"Container of {len(data)} bytes is truncated")
    body, (stored,) = data[: -_TRAILER.size], _TRAILER.unpack(data[-_TRAILER.size :])
    if zlib.crc32(body) != stored:
        raise CorruptChecksum("CRC-32 trailer does not match the container contents")

    found, version, meta_len = _HEADER.unpack_from(body)
    if found != magic:
        raise FormatVersionMismatch(f"Expected magic {magic!r}, found {found!r}")
    if version != VERSION:
        raise FormatVersionMismatch(f"Unsupported container version {version}")

    payload = body[_HEADER.size + meta_len :]
    if _HEADER.size + meta_len > len(body) or len(payload) % 8:
        raise CorruptChecksum("Metadata length does not fit the container")
    metadata = yaml.safe_load(body[_HEADER.size : _HEADER.size + meta_len].decode("utf-8"))
    return metadata or {}, np.frombuffer(payload, dtype="<f8").astype(np.float64)


def write_container(
    path: str | Path, magic: bytes, metadata: dict[str, Any], payload: FloatArray
) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_bytes(encode_container(magic, metadata, payload))


def read_container(path: str | Path, magic: bytes) -> tuple[dict[str, Any], FloatArray]:
    return decode_container(Path(path).read_bytes(), magic)


# -- models ---------------------------------------------------------------------------


def save_model(model: DeepOnetModel, path: str | Path) -> None:
    payload = np.concatenate([p.ravel() for p in model.params])
    write_container(path, MODEL_MAGIC, model.describe(), payload)


def _take(payload: FloatArray, offset: int, shape: list[int]) -> tuple[FloatArray, int]:
    size = int(np.prod(shape))
    if offset + size > payload.shape[0]:
        raise DimensionMismatch("Model payload is shorter than its layer table")
    return payload[offset : offset + size].reshape(shape).copy(), offset + size


def load_model(path: str | Path) -> DeepOnetModel:
    meta, payload = read_container(path, MODEL_MAGIC)
    grid = build_grid(meta["grid"]["kind"], meta["grid"]["subdivisions"])

    offset = 0
    conv: list[Conv2d] = []
    dense: list[Dense] = []
    for spec in meta["layers"]:
        kind = spec["kind"]
        if kind == "global-average-pool":
            continue
        weight, offset = _take(payload, offset, spec["shape"])
        bias, offset = _take(payload, offset, [spec["shape"][0 if kind == "conv2d" else 1]])
        activation = Activation(spec["activation"])
        if kind == "conv2d":
            conv.append(Conv2d(weight, bias, activation, spec["stride"], spec["padding"]))
        else:
            dense.append(Dense(weight, bias, activation))
    out_bias, offset = _take(payload, offset, [1])
    if offset != payload.shape[0]:
        raise DimensionMismatch(f"{payload.shape[0] - offset} unread values in model payload")

    n_branch = meta["trunk_start"] - len(conv) - (1 if conv else 0)
    return DeepOnetModel(
        grid,
        dense[:n_branch],
        dense[n_branch:],
        out_bias,
        conv=conv,
        mask=MaskKind(meta["mask"]),
        alpha=float(meta["alpha"]),
    )


# -- datasets -------------------------------------------------------------------------


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    metadata = {
        **dataset.metadata,
        "equation": dataset.equation.value,
        "grid": dataset.grid.describe(),
        "count": dataset.count,
        "nodes": dataset.grid.n_nodes,
        "arrays": ["k", "f", "u"],
    }
    payload = np.concatenate([dataset.k.ravel(), dataset.f.ravel(), dataset.u.ravel()])
    write_container(path, DATASET_MAGIC, metadata, payload)


def load_dataset(path: str | Path) -> Dataset:
    meta, payload = read_container(path, DATASET_MAGIC)
    grid = build_grid(meta["grid"]["kind"], meta["grid"]["subdivisions"])
    count, nodes = int(meta["count"]), int(meta["nodes"])
    if nodes != grid.n_nodes or payload.shape[0] != 3 * count * nodes:
        raise DimensionMismatch(
            f"Dataset payload of {payload.shape[0]} values for {count} samples of {nodes} nodes"
        )
    k, f, u = payload.reshape(3, count, nodes)
    extra = {key: value for key, value in meta.items() if key not in _DATASET_KEYS}
    return Dataset(Equation(meta["equation"]), grid, k.copy(), f.copy(), u.copy(), extra)
