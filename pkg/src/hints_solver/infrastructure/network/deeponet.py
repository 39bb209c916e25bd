"""DeepONet operator network: (k, f) on the training grid -> u at arbitrary query points."""

from typing import Any

import numpy as np

from hints_solver.core.errors import GridMismatch
from hints_solver.core.models import (
    FieldSample,
    FloatArray,
    Grid,
    GridKind,
    IntArray,
    MaskKind,
    NetworkConfig,
)
from hints_solver.infrastructure.network.layers import (
    Activation,
    Conv2d,
    Dense,
    GlobalAveragePool,
)


def mask_for(grid: Grid) -> MaskKind:
    if grid.kind is GridKind.UNIFORM_INTERVAL:
        return MaskKind.INTERVAL
    if grid.kind is GridKind.L_SHAPED_TRIANGULATION:
        return MaskKind.NONE
    return MaskKind.SQUARE


def mask_values(mask: MaskKind, points: FloatArray) -> FloatArray:
    """Boundary factor that vanishes on the edges of (0,1) or (0,1)^2."""
    if mask is MaskKind.INTERVAL:
        x = points[:, 0]
        return x * (x - 1.0)
    if mask is MaskKind.SQUARE:
        x, y = points[:, 0], points[:, 1]
        return x * (x - 1.0) * y * (y - 1.0)
    return np.ones(points.shape[0])


def loss_weights(u: FloatArray, alpha: float, eps: float) -> FloatArray:
    if alpha == 0.0:
        return np.ones_like(u)
    return 1.0 / (eps + np.abs(u) ** alpha)


class DeepOnetModel:
    """Branch encodes (k, f/|f|), trunk encodes the query point, output is their inner product.

    The prediction is ``s * mask(x) * (<branch, trunk(x)> + bias)`` with ``s = |f|_2``;
    a zero forcing yields an exactly zero prediction. In 2D the branch starts with
    stride-2 convolutions over the interior (n - 1) x (n - 1) block of the training
    grid lattice (points outside the domain read as zero) and a global average pool.
    """

    def __init__(
        self,
        grid: Grid,
        branch: list[Dense],
        trunk: list[Dense],
        bias: FloatArray,
        conv: list[Conv2d] | None = None,
        mask: MaskKind | None = None,
        alpha: float = 0.0,
    ) -> None:
        self.grid = grid
        self.conv = conv or []
        self.pool = GlobalAveragePool() if self.conv else None
        self.branch = branch
        self.trunk = trunk
        self.bias = bias
        self.mask = mask if mask is not None else mask_for(grid)
        self.alpha = alpha

        if branch[-1].weight.shape[1] != trunk[-1].weight.shape[1]:
            raise ValueError(
                f"Branch width {branch[-1].weight.shape[1]} != trunk width "
                f"{trunk[-1].weight.shape[1]}"
            )
        if self.conv and grid.lattice is None:
            raise ValueError(f"A convolutional branch needs a lattice grid, got {grid.kind}")

    @classmethod
    def build(
        cls, grid: Grid, cfg: NetworkConfig | None = None, alpha: float = 0.0
    ) -> "DeepOnetModel":
        """Freshly initialized network sized for ``grid``."""
        cfg = cfg or NetworkConfig()
        rng = np.random.default_rng(cfg.seed)
        branch_widths, trunk_widths, channels = cfg.resolved(grid.dimension)

        conv: list[Conv2d] = []
        if grid.dimension == 1:
            widths = [2 * grid.n_nodes, *branch_widths]
        else:
            c_in = 2
            for c_out in channels:
                conv.append(Conv2d.initialize(rng, c_in, c_out, Activation.RELU))
                c_in = c_out
            widths = [c_in, *branch_widths]

        branch = [
            Dense.initialize(
                rng, n_in, n_out, Activation.LINEAR if i == len(widths) - 2 else Activation.RELU
            )
            for i, (n_in, n_out) in enumerate(zip(widths[:-1], widths[1:], strict=True))
        ]
        t_widths = [grid.dimension, *trunk_widths]
        trunk = [
            Dense.initialize(rng, n_in, n_out, Activation.TANH)
            for n_in, n_out in zip(t_widths[:-1], t_widths[1:], strict=True)
        ]
        return cls(grid, branch, trunk, np.zeros(1), conv=conv, alpha=alpha)

    @property
    def layers(self) -> list[Any]:
        """Every layer in parameter order: convolutions, pool, branch head, trunk."""
        pool = [self.pool] if self.pool is not None else []
        return [*self.conv, *pool, *self.branch, *self.trunk]

    @property
    def params(self) -> list[FloatArray]:
        return [p for layer in self.layers for p in layer.params] + [self.bias]

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.params)

    def branch_lattice(self) -> IntArray:
        """Node indices of the interior (n - 1) x (n - 1) block; -1 outside the domain."""
        if self.grid.lattice is None:
            raise ValueError(f"{self.grid.kind} grids have no node lattice")
        return self.grid.lattice[1:-1, 1:-1]

    def spatial_sizes(self) -> list[int]:
        """Lattice side length entering each convolution, then the size reaching the pool."""
        if not self.conv or self.grid.lattice is None:
            return []
        sizes = [int(self.branch_lattice().shape[0])]
        for layer in self.conv:
            sizes.append(layer.output_size(sizes[-1]))
        return sizes

    def describe(self) -> dict[str, Any]:
        return {
            "grid": self.grid.describe(),
            "mask": self.mask.value,
            "alpha": self.alpha,
            "layers": [layer.describe() for layer in self.layers],
            "trunk_start": len(self.conv) + (1 if self.pool else 0) + len(self.branch),
            "spatial_sizes": self.spatial_sizes(),
            "parameter_count": self.parameter_count,
        }

    # -- forward ----------------------------------------------------------------------

    def _branch_input(self, k: FloatArray, f: FloatArray) -> FloatArray:
        if not self.conv:
            return np.concatenate([k, f], axis=1)
        lattice = self.branch_lattice()
        inside = lattice >= 0
        index = np.maximum(lattice, 0)
        k_map = np.where(inside, k[:, index], 0.0)
        f_map = np.where(inside, f[:, index], 0.0)
        return np.stack([k_map, f_map], axis=1)

    def _run(
        self, k: FloatArray, f: FloatArray, points: FloatArray
    ) -> tuple[FloatArray, dict[str, Any]]:
        if k.ndim != 2 or k.shape != f.shape or k.shape[1] != self.grid.n_nodes:
            raise GridMismatch(
                f"Expected (batch, {self.grid.n_nodes}) inputs on the training grid, "
                f"got k {k.shape} and f {f.shape}"
            )
        scale = np.linalg.norm(f, axis=1)
        f_unit = f / np.where(scale > 0.0, scale, 1.0)[:, None]

        x = self._branch_input(k, f_unit)
        branch_caches = []
        for layer in [*self.conv, *([self.pool] if self.pool else []), *self.branch]:
            x, cache = layer.forward(x)
            branch_caches.append(cache)
        b = x

        t = points
        trunk_caches = []
        for layer in self.trunk:
            t, cache = layer.forward(t)
            trunk_caches.append(cache)

        raw = b @ t.T + self.bias[0]
        factor = scale[:, None] * mask_values(self.mask, points)[None, :]
        state = {"b": b, "t": t, "factor": factor, "branch": branch_caches, "trunk": trunk_caches}
        return factor * raw, state

    def predict(self, k: FloatArray, f: FloatArray, points: FloatArray) -> FloatArray:
        """Batched evaluation: (B, N) nodal k and f -> (B, P) values at ``points``."""
        k_arr = np.asarray(k, dtype=np.float64)
        out, _ = self._run(k_arr, np.asarray(f, dtype=np.float64), points)
        return out

    def forward(self, k: FieldSample, f: FieldSample, query_points: FloatArray) -> FloatArray:
        if not (k.grid.matches(self.grid) and f.grid.matches(self.grid)):
            raise GridMismatch(
                f"Model trained on {self.grid.kind} n={self.grid.subdivisions[0]}, "
                f"got fields on {k.grid.kind} n={k.grid.subdivisions[0]}"
            )
        if not np.any(f.values):
            return np.zeros(query_points.shape[0])
        return self.predict(k.values[None, :], f.values[None, :], query_points)[0]

    # -- training ---------------------------------------------------------------------

    def loss(
        self, k: FloatArray, f: FloatArray, u: FloatArray, alpha: float, eps: float = 1e-3
    ) -> float:
        """Weighted mean squared error over every sample and every training-grid node."""
        prediction = self.predict(k, f, self.grid.nodes)
        return float(np.mean(loss_weights(u, alpha, eps) * (prediction - u) ** 2))

    def backward(
        self, k: FloatArray, f: FloatArray, u: FloatArray, alpha: float, eps: float = 1e-3
    ) -> tuple[float, list[FloatArray]]:
        """Loss and its exact gradient with respect to ``params``, in the same order."""
        prediction, cache = self._run(
            np.asarray(k, dtype=np.float64), np.asarray(f, dtype=np.float64), self.grid.nodes
        )
        weights = loss_weights(u, alpha, eps)
        diff = prediction - u
        loss = float(np.mean(weights * diff**2))

        g_out = 2.0 * weights * diff / diff.size
        g_raw = g_out * cache["factor"]
        d_bias = np.array([g_raw.sum()])
        g_b = g_raw @ cache["t"]
        g_t = g_raw.T @ cache["b"]

        branch_layers = [*self.conv, *([self.pool] if self.pool else []), *self.branch]
        branch_grads: list[list[FloatArray]] = []
        for layer, layer_cache in zip(
            reversed(branch_layers), reversed(cache["branch"]), strict=True
        ):
            g_b, grads = layer.backward(g_b, layer_cache)
            branch_grads.append(grads)

        trunk_grads: list[list[FloatArray]] = []
        for layer, layer_cache in zip(reversed(self.trunk), reversed(cache["trunk"]), strict=True):
            g_t, grads = layer.backward(g_t, layer_cache)
            trunk_grads.append(grads)

        ordered = [*reversed(branch_grads), *reversed(trunk_grads)]
        return loss, [g for grads in ordered for g in grads] + [d_bias]
