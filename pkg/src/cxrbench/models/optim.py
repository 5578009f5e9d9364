"""Adam for the numpy-parameterized network."""

from __future__ import annotations

import numpy as np

__all__ = ["AdamOptimizer"]


class AdamOptimizer:
    """Standard Adam with bias correction, updating parameter dicts in place."""

    def __init__(
        self,
        learning_rate: float = 1e-5,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> None:
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
            raise ValueError("beta1 and beta2 must be in [0, 1)")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        if set(grads) != set(params):
            raise ValueError("gradient keys do not match parameter keys")
        self.step_count += 1
        t = self.step_count
        scale = self.learning_rate * np.sqrt(1 - self.beta2**t) / (1 - self.beta1**t)
        for key, grad in grads.items():
            m = self._m.setdefault(key, np.zeros_like(params[key]))
            v = self._v.setdefault(key, np.zeros_like(params[key]))
            m += (1 - self.beta1) * (grad - m)
            v += (1 - self.beta2) * (grad * grad - v)
            params[key] -= scale * m / (np.sqrt(v) + self.epsilon)
