"""Layers with explicit forward/backward passes.

``forward`` returns the output together with a cache; ``backward`` consumes that cache,
so a layer holds nothing but its parameters and inference never mutates it.
"""

from enum import StrEnum
from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from hints_solver.core.models import FloatArray


class Activation(StrEnum):
    RELU = "relu"
    TANH = "tanh"
    LINEAR = "linear"


def _activate(z: FloatArray, activation: Activation) -> FloatArray:
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    if activation is Activation.TANH:
        return np.tanh(z)
    return z


def _activation_grad(
    grad: FloatArray, z: FloatArray, y: FloatArray, activation: Activation
) -> FloatArray:
    if activation is Activation.RELU:
        # zero at the kink
        return grad * (z > 0.0)
    if activation is Activation.TANH:
        return grad * (1.0 - y * y)
    return grad


def _uniform_init(
    rng: np.random.Generator,
    shape: tuple[int, ...],
    fan_in: int,
    fan_out: int,
    activation: Activation,
) -> FloatArray:
    """He-uniform for ReLU, Xavier-uniform otherwise."""
    if activation is Activation.RELU:
        limit = np.sqrt(6.0 / fan_in)
    else:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Dense:
    """Affine map ``x W + b`` followed by an elementwise activation."""

    kind = "dense"

    def __init__(self, weight: FloatArray, bias: FloatArray, activation: Activation) -> None:
        self.weight = weight
        self.bias = bias
        self.activation = Activation(activation)

    @classmethod
    def initialize(
        cls, rng: np.random.Generator, n_in: int, n_out: int, activation: Activation
    ) -> "Dense":
        weight = _uniform_init(rng, (n_in, n_out), n_in, n_out, activation)
        return cls(weight, np.zeros(n_out), activation)

    @property
    def params(self) -> list[FloatArray]:
        return [self.weight, self.bias]

    def describe(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "shape": list(self.weight.shape),
            "activation": self.activation.value,
        }

    def forward(
        self, x: FloatArray
    ) -> tuple[FloatArray, tuple[FloatArray, FloatArray, FloatArray]]:
        z = x @ self.weight + self.bias
        y = _activate(z, self.activation)
        return y, (x, z, y)

    def backward(
        self, grad: FloatArray, cache: tuple[FloatArray, FloatArray, FloatArray]
    ) -> tuple[FloatArray, list[FloatArray]]:
        x, z, y = cache
        gz = _activation_grad(grad, z, y, self.activation)
        return gz @ self.weight.T, [x.T @ gz, gz.sum(axis=0)]


class Conv2d:
    """Square-kernel convolution over (batch, channel, height, width) via im2col."""

    kind = "conv2d"

    def __init__(
        self,
        weight: FloatArray,
        bias: FloatArray,
        activation: Activation,
        stride: int = 2,
        padding: int = 1,
    ) -> None:
        self.weight = weight
        self.bias = bias
        self.activation = Activation(activation)
        self.stride = stride
        self.padding = padding

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        c_in: int,
        c_out: int,
        activation: Activation,
        kernel: int = 3,
        stride: int = 2,
        padding: int = 1,
    ) -> "Conv2d":
        shape = (c_out, c_in, kernel, kernel)
        weight = _uniform_init(rng, shape, c_in * kernel**2, c_out * kernel**2, activation)
        return cls(weight, np.zeros(c_out), activation, stride, padding)

    @property
    def kernel(self) -> int:
        return int(self.weight.shape[2])

    @property
    def params(self) -> list[FloatArray]:
        return [self.weight, self.bias]

    def describe(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "shape": list(self.weight.shape),
            "activation": self.activation.value,
            "stride": self.stride,
            "padding": self.padding,
        }

    def output_size(self, size: int) -> int:
        return (size + 2 * self.padding - self.kernel) // self.stride + 1

    def forward(self, x: FloatArray) -> tuple[FloatArray, tuple[Any, ...]]:
        batch, channels, height, width = x.shape
        k, s, p = self.kernel, self.stride, self.padding
        ho, wo = self.output_size(height), self.output_size(width)

        padded = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
        windows = sliding_window_view(padded, (k, k), axis=(2, 3))[:, :, ::s, ::s][:, :, :ho, :wo]
        cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(batch * ho * wo, channels * k * k)

        z = cols @ self.weight.reshape(self.weight.shape[0], -1).T + self.bias
        z = z.reshape(batch, ho, wo, -1).transpose(0, 3, 1, 2)
        y = _activate(z, self.activation)
        return y, (x.shape, cols, z, y)

    def backward(
        self, grad: FloatArray, cache: tuple[Any, ...]
    ) -> tuple[FloatArray, list[FloatArray]]:
        (batch, channels, height, width), cols, z, y = cache
        k, s, p = self.kernel, self.stride, self.padding
        _, c_out, ho, wo = z.shape

        gz = _activation_grad(grad, z, y, self.activation)
        g = gz.transpose(0, 2, 3, 1).reshape(batch * ho * wo, c_out)
        w_mat = self.weight.reshape(c_out, -1)
        d_weight = (g.T @ cols).reshape(self.weight.shape)
        d_bias = g.sum(axis=0)

        d_cols = (g @ w_mat).reshape(batch, ho, wo, channels, k, k)
        d_padded = np.zeros((batch, channels, height + 2 * p, width + 2 * p))
        for ki in range(k):
            for kj in range(k):
                d_padded[:, :, ki : ki + s * ho : s, kj : kj + s * wo : s] += d_cols[
                    :, :, :, :, ki, kj
                ].transpose(0, 3, 1, 2)
        d_x = d_padded[:, :, p : p + height, p : p + width]
        return d_x, [d_weight, d_bias]


class GlobalAveragePool:
    """Mean over the spatial axes: (B, C, H, W) -> (B, C)."""

    kind = "global-average-pool"

    @property
    def params(self) -> list[FloatArray]:
        return []

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind}

    def forward(self, x: FloatArray) -> tuple[FloatArray, tuple[int, ...]]:
        return x.mean(axis=(2, 3)), x.shape

    def backward(
        self, grad: FloatArray, cache: tuple[int, ...]
    ) -> tuple[FloatArray, list[FloatArray]]:
        _, _, height, width = cache
        spread = np.broadcast_to(grad[:, :, None, None], cache) / (height * width)
        return spread.copy(), []
