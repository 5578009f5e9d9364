"""Model zoo: five pretrained ImageNet backbones plus the from-scratch CNN.

Every model exposes the same small protocol the training engine drives:

* ``name``, ``input_side``, ``normalization``, ``weights_suffix``
* ``predict_proba(batch) -> (batch, 2)`` probabilities
* ``start_training(config)`` then ``train_on_batch(x, y) -> (loss, accuracy)``
* ``save_weights(path)`` / ``load_weights(path)``

The pretrained backbones need tensorflow/keras, which is imported lazily:
importing this package or building the small CNN never touches it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..preprocess import Normalization
from .tiny_cnn import TinyCnn

__all__ = [
    "BACKBONES",
    "PRETRAINED_BACKBONES",
    "INPUT_SIDES",
    "BACKBONE_NORMALIZATIONS",
    "ModelConfig",
    "build_model",
    "TinyCnn",
]

PRETRAINED_BACKBONES = (
    "inceptionv3",
    "resnet50",
    "resnet101",
    "resnet152",
    "inception_resnetv2",
)
BACKBONES = PRETRAINED_BACKBONES + ("tiny_cnn",)

# Input sides are a property of each architecture, not a tunable.
INPUT_SIDES: dict[str, int] = {
    "inceptionv3": 299,
    "resnet50": 224,
    "resnet101": 224,
    "resnet152": 224,
    "inception_resnetv2": 299,
    "tiny_cnn": 224,
}

BACKBONE_NORMALIZATIONS: dict[str, Normalization] = {
    "inceptionv3": Normalization.IMAGENET_TF,
    "resnet50": Normalization.IMAGENET_CAFFE,
    "resnet101": Normalization.IMAGENET_CAFFE,
    "resnet152": Normalization.IMAGENET_CAFFE,
    "inception_resnetv2": Normalization.IMAGENET_TF,
    "tiny_cnn": Normalization.UNIT,
}


@dataclass(frozen=True)
class ModelConfig:
    """How to build one classifier; input side and scaling are derived."""

    backbone: str
    pretrained: bool = True
    seed: int = 0
    dropout_rate: float = 0.5
    input_side: int = field(init=False)
    normalization: Normalization = field(init=False)

    def __post_init__(self) -> None:
        if self.backbone not in BACKBONES:
            raise ValueError(
                f"unknown backbone {self.backbone!r}; choose from {', '.join(BACKBONES)}"
            )
        if self.backbone == "tiny_cnn" and self.pretrained:
            raise ValueError("tiny_cnn has no pretraining corpus; pass pretrained=False")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must be in [0, 1), got {self.dropout_rate}")
        object.__setattr__(self, "input_side", INPUT_SIDES[self.backbone])
        object.__setattr__(self, "normalization", BACKBONE_NORMALIZATIONS[self.backbone])


def build_model(config: ModelConfig):
    """Instantiate the classifier a config describes."""
    if config.backbone == "tiny_cnn":
        return TinyCnn(seed=config.seed, dropout_rate=config.dropout_rate)
    from . import backbones  # deferred: pulls in tensorflow

    return backbones.KerasBackboneModel(config)
