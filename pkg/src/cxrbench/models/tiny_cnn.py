"""A small CNN trained from scratch, with hand-written backpropagation.

Architecture, fixed:

    conv 3x3 -> 8 maps, ReLU
    max pool 2x2 (stride 2)
    conv 3x3 -> 16 maps, ReLU
    global average pool
    dropout 0.5 (training only)
    dense -> 2 logits, softmax

The network accepts any square input of side >= 8; the harness trains it
at 224.  All math is float64 numpy so gradients can be checked against
finite differences.
"""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from ..preprocess import Normalization
from . import layers
from .optim import AdamOptimizer

if TYPE_CHECKING:
    from ..training import TrainConfig

__all__ = ["TinyCnn", "init_params"]

_KERNEL_SIDE = 3
_POOL_WINDOW = 2
_CONV1_MAPS = 8
_CONV2_MAPS = 16
_NUM_CLASSES = 2
_MIN_SIDE = 8  # smallest side for which both convolutions see valid windows

PARAM_KEYS = (
    "conv1_kernels",
    "conv1_bias",
    "conv2_kernels",
    "conv2_bias",
    "dense_weights",
    "dense_bias",
)


def init_params(seed: int, in_channels: int = 3) -> dict[str, np.ndarray]:
    """He-normal convolution kernels, Glorot-uniform dense weights, zero biases."""
    rng = np.random.default_rng(seed)
    k = _KERNEL_SIDE

    def he_kernels(c_in: int, c_out: int) -> np.ndarray:
        std = np.sqrt(2.0 / (k * k * c_in))
        return rng.normal(0.0, std, size=(k, k, c_in, c_out))

    limit = np.sqrt(6.0 / (_CONV2_MAPS + _NUM_CLASSES))
    return {
        "conv1_kernels": he_kernels(in_channels, _CONV1_MAPS),
        "conv1_bias": np.zeros(_CONV1_MAPS),
        "conv2_kernels": he_kernels(_CONV1_MAPS, _CONV2_MAPS),
        "conv2_bias": np.zeros(_CONV2_MAPS),
        "dense_weights": rng.uniform(-limit, limit, size=(_CONV2_MAPS, _NUM_CLASSES)),
        "dense_bias": np.zeros(_NUM_CLASSES),
    }


class TinyCnn:
    """From-scratch network implementing the shared model protocol."""

    name = "tiny_cnn"
    input_side = 224
    normalization = Normalization.UNIT
    weights_suffix = ".npz"

    def __init__(
        self,
        seed: int = 0,
        dropout_rate: float = 0.5,
        params: dict[str, np.ndarray] | None = None,
    ) -> None:
        if not 0.0 <= dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {dropout_rate}")
        self.dropout_rate = dropout_rate
        self.params = params if params is not None else init_params(seed)
        if set(self.params) != set(PARAM_KEYS):
            raise ValueError(f"parameter keys must be {PARAM_KEYS}")
        self._optimizer: AdamOptimizer | None = None
        self._dropout_rng: np.random.Generator | None = None

    # -- forward -----------------------------------------------------------

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 3:
            x = x[np.newaxis]
        if x.ndim != 4 or x.shape[3] != self.params["conv1_kernels"].shape[2]:
            raise ValueError(f"expected (batch, side, side, 3) input, got shape {x.shape}")
        if x.shape[1] != x.shape[2] or x.shape[1] < _MIN_SIDE:
            raise ValueError(
                f"input must be square with side >= {_MIN_SIDE}, got {x.shape[1:3]}"
            )
        return x

    def _forward(
        self, x: np.ndarray, dropout_mask: np.ndarray | None
    ) -> tuple[np.ndarray, dict[str, np.ndarray]]:
        p = self.params
        z1 = layers.conv_forward(x, p["conv1_kernels"], p["conv1_bias"])
        a1 = layers.relu(z1)
        pooled = layers.max_pool(a1, _POOL_WINDOW)
        z2 = layers.conv_forward(pooled, p["conv2_kernels"], p["conv2_bias"])
        a2 = layers.relu(z2)
        features = layers.global_avg_pool(a2)
        dropped = features if dropout_mask is None else features * dropout_mask
        logits = layers.dense_forward(dropped, p["dense_weights"], p["dense_bias"])
        probs = layers.softmax(logits, axis=1)
        cache = {"x": x, "z1": z1, "a1": a1, "pooled": pooled, "z2": z2, "a2": a2,
                 "features": features, "dropped": dropped, "probs": probs}
        return probs, cache

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        """Class probabilities, dropout off: (batch, 2) rows summing to one."""
        x = self._check_input(x)
        probs, _ = self._forward(x, dropout_mask=None)
        return probs

    # -- training ----------------------------------------------------------

    def loss_and_grads(
        self,
        x: np.ndarray,
        labels: np.ndarray,
        dropout_rng: np.random.Generator | None = None,
    ) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
        """Mean cross-entropy, parameter gradients, and batch probabilities.

        Without ``dropout_rng`` the pass is deterministic (dropout disabled),
        which is the configuration the finite-difference check exercises.
        """
        x = self._check_input(x)
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (x.shape[0],):
            raise ValueError(f"labels must be (batch,), got {labels.shape}")
        mask = None
        if dropout_rng is not None and self.dropout_rate > 0.0:
            keep = dropout_rng.random((x.shape[0], _CONV2_MAPS)) >= self.dropout_rate
            mask = keep / (1.0 - self.dropout_rate)  # inverted scaling
        probs, cache = self._forward(x, mask)
        loss = layers.cross_entropy(probs, labels)

        p = self.params
        d_logits = layers.softmax_cross_entropy_backward(probs, labels)
        d_dropped, d_dense_w, d_dense_b = layers.dense_backward(
            d_logits, cache["dropped"], p["dense_weights"]
        )
        d_features = d_dropped if mask is None else d_dropped * mask
        d_a2 = layers.global_avg_pool_backward(d_features, cache["a2"])
        d_z2 = layers.relu_backward(d_a2, cache["z2"])
        d_pooled, d_conv2_w, d_conv2_b = layers.conv_backward(
            d_z2, cache["pooled"], p["conv2_kernels"]
        )
        d_a1 = layers.max_pool_backward(d_pooled, cache["a1"], _POOL_WINDOW)
        d_z1 = layers.relu_backward(d_a1, cache["z1"])
        _, d_conv1_w, d_conv1_b = layers.conv_backward(d_z1, cache["x"], p["conv1_kernels"])
        grads = {
            "conv1_kernels": d_conv1_w,
            "conv1_bias": d_conv1_b,
            "conv2_kernels": d_conv2_w,
            "conv2_bias": d_conv2_b,
            "dense_weights": d_dense_w,
            "dense_bias": d_dense_b,
        }
        return loss, grads, probs

    def start_training(self, config: "TrainConfig") -> None:
        self._optimizer = AdamOptimizer(
            learning_rate=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.epsilon,
        )
        self._dropout_rng = np.random.default_rng(config.seed)

    def train_on_batch(self, x: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
        if self._optimizer is None or self._dropout_rng is None:
            raise RuntimeError("call start_training(config) before train_on_batch")
        loss, grads, probs = self.loss_and_grads(x, labels, dropout_rng=self._dropout_rng)
        self._optimizer.step(self.params, grads)
        predicted = np.asarray(probs[:, 1] >= probs[:, 0], dtype=np.int64)
        accuracy = float((predicted == np.asarray(labels)).mean())
        return loss, accuracy

    # -- persistence -------------------------------------------------------

    @property
    def num_params(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def save_weights(self, path) -> None:
        np.savez(path, **self.params)

    def load_weights(self, path) -> None:
        with np.load(path) as data:
            if set(data.files) != set(PARAM_KEYS):
                raise ValueError(f"weight file {path} does not hold the expected parameters")
            self.params = {key: data[key].copy() for key in PARAM_KEYS}
