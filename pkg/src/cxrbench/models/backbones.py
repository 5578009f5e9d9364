"""Keras-backed ImageNet backbones with a two-class softmax head.

Each classifier is the published architecture without its original top,
followed by global average pooling, dropout, and a two-unit softmax dense
layer.  With ``pretrained=True`` the convolutional stack starts from
ImageNet weights and every layer stays trainable (full fine-tuning); the
classification head always starts from a fresh random initialization.

ImageNet weights are fetched once into the keras cache; when that fails
(offline machines) the error names the backbone and explains how to fetch
the file out of band.
"""

from __future__ import annotations

import os
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from ..training import TrainConfig
    from . import ModelConfig

__all__ = ["WeightsUnavailableError", "KerasBackboneModel", "configure_device"]

_APPLICATIONS = {
    "inceptionv3": "InceptionV3",
    "resnet50": "ResNet50",
    "resnet101": "ResNet101",
    "resnet152": "ResNet152",
    "inception_resnetv2": "InceptionResNetV2",
}

# Environment switch mirrored by the run config's ``device`` key.
DEVICE_ENV_VAR = "CXRBENCH_DEVICE"


class WeightsUnavailableError(RuntimeError):
    """Pretrained weights could not be loaded (usually: no network access)."""


def _import_keras():
    os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "2")
    try:
        import keras
        import tensorflow as tf
    except ImportError as exc:
        raise ImportError(
            "the pretrained backbones need tensorflow; install the 'backbones' extra"
        ) from exc
    return keras, tf


def configure_device(device: str | None = None) -> str:
    """Pin execution to ``cpu`` or ``gpu``; default honors CXRBENCH_DEVICE.

    Returns the effective device string.  Must run before the first model
    is built; once tensorflow has initialized its devices the choice is
    locked for the process.
    """
    keras, tf = _import_keras()
    choice = (device or os.environ.get(DEVICE_ENV_VAR) or "auto").lower()
    if choice != "auto" and choice != "cpu" and not choice.startswith("gpu"):
        raise ValueError(f"unknown device {choice!r}: expected cpu, gpu, or auto")
    gpus = tf.config.list_physical_devices("GPU")
    if choice == "cpu":
        tf.config.set_visible_devices([], "GPU")
        return "cpu"
    if choice.startswith("gpu"):
        if not gpus:
            raise RuntimeError(f"device {choice!r} requested but no GPU is visible")
        return choice
    return "gpu" if gpus else "cpu"


def build_keras_classifier(config: "ModelConfig"):
    """Backbone minus its original top, plus GAP -> dropout -> dense softmax."""
    keras, _ = _import_keras()
    class_name = _APPLICATIONS[config.backbone]
    builder = getattr(keras.applications, class_name)
    keras.utils.set_random_seed(config.seed)
    side = config.input_side
    weights = "imagenet" if config.pretrained else None
    try:
        base = builder(include_top=False, weights=weights, input_shape=(side, side, 3))
    except Exception as exc:
        message = str(exc).lower()
        if weights and ("url" in message or "connect" in message or "download" in message
                        or "resolve" in message or "timed out" in message
                        or "no such file" in message or "unable to open" in message):
            raise WeightsUnavailableError(
                f"could not fetch ImageNet weights for {config.backbone!r}: {exc}\n"
                "On an offline machine, download the file named in the error from the "
                "keras release storage on another host and place it under "
                "~/.keras/models/, then rerun."
            ) from exc
        raise
    inputs = keras.Input(shape=(side, side, 3))
    features = base(inputs)
    pooled = keras.layers.GlobalAveragePooling2D()(features)
    dropped = keras.layers.Dropout(config.dropout_rate)(pooled)
    outputs = keras.layers.Dense(2, activation="softmax")(dropped)
    model = keras.Model(inputs, outputs, name=config.backbone)
    return model


class KerasBackboneModel:
    """Adapter giving keras models the engine's training protocol."""

    weights_suffix = ".weights.h5"

    def __init__(self, config: "ModelConfig") -> None:
        self.config = config
        self.name = config.backbone
        self.input_side = config.input_side
        self.normalization = config.normalization
        self.keras_model = build_keras_classifier(config)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float32)
        side = self.input_side
        if x.ndim == 3:
            x = x[np.newaxis]
        if x.ndim != 4 or x.shape[1:] != (side, side, 3):
            raise ValueError(
                f"{self.name} expects (batch, {side}, {side}, 3) input, got {x.shape}"
            )
        return x

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        probs = self.keras_model.predict_on_batch(x)
        return np.asarray(probs, dtype=np.float64)

    def start_training(self, config: "TrainConfig") -> None:
        keras, _ = _import_keras()
        optimizer = keras.optimizers.Adam(
            learning_rate=config.learning_rate,
            beta_1=config.beta1,
            beta_2=config.beta2,
            epsilon=config.epsilon,
        )
        self.keras_model.compile(
            optimizer=optimizer,
            loss="sparse_categorical_crossentropy",
            metrics=["accuracy"],
        )

    def train_on_batch(self, x: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
        x = self._check_input(x)
        labels = np.asarray(labels, dtype=np.int64)
        loss, accuracy = self.keras_model.train_on_batch(x, labels)
        return float(loss), float(accuracy)

    @property
    def num_params(self) -> int:
        return int(self.keras_model.count_params())

    def save_weights(self, path) -> None:
        self.keras_model.save_weights(str(path))

    def load_weights(self, path) -> None:
        self.keras_model.load_weights(str(path))
