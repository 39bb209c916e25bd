import numpy as np

from hints_solver.core.models import FloatArray


class Adam:
    """Adam with bias correction; updates the given arrays in place."""

    def __init__(
        self,
        params: list[FloatArray],
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[FloatArray], learning_rate: float) -> None:
        if len(grads) != len(self.params):
            raise ValueError(f"Got {len(grads)} gradients for {len(self.params)} parameters")
        self.step_count += 1
        c1 = 1.0 - self.beta1**self.step_count
        c2 = 1.0 - self.beta2**self.step_count
        for p, g, m, v in zip(self.params, grads, self._m, self._v, strict=True):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)
