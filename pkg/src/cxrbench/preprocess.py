"""Image loading, resizing, and per-backbone input standardization.

All images come out as float32 ``(side, side, 3)`` arrays.  Grayscale
inputs (8- or 16-bit) are replicated across the three channels so a single
code path feeds every network.  Resizing is bilinear on float data.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from .records import ImageRecord

__all__ = [
    "Normalization",
    "PreprocessError",
    "load_image_array",
    "resize_bilinear",
    "standardize",
    "preprocess_image",
]

# ImageNet channel means in BGR order, on the 0..255 scale.
_CAFFE_BGR_MEANS = np.array([103.939, 116.779, 123.68], dtype=np.float32)


class Normalization(str, Enum):
    """Input scaling conventions, matching each backbone's pretraining."""

    UNIT = "unit"                     # [0, 1]
    IMAGENET_CAFFE = "imagenet_caffe"  # BGR, mean-subtracted, 0..255 scale
    IMAGENET_TF = "imagenet_tf"        # [-1, 1]


class PreprocessError(Exception):
    """Raised with the offending record id or path in the message."""


def load_image_array(path: str | Path) -> np.ndarray:
    """Decode an image file to float32 ``(h, w, 3)`` in ``[0, 1]``.

    Handles 8-bit gray/RGB/palette and 16-bit grayscale; alpha is dropped.
    """
    path = Path(path)
    try:
        img = Image.open(path)
    except OSError as exc:  # covers UnidentifiedImageError and missing files
        raise PreprocessError(f"{path}: {exc}") from exc
    with img:
        img.load()
        mode = img.mode
        if mode in ("I;16", "I;16B", "I;16L", "I"):
            raw = np.asarray(img, dtype=np.float64)
            peak = 65535.0 if mode.startswith("I;16") else max(raw.max(), 1.0)
            plane = np.clip(raw / peak, 0.0, 1.0)
            array = np.repeat(plane[:, :, np.newaxis], 3, axis=2)
        else:
            if mode not in ("RGB", "L"):
                img = img.convert("RGB" if mode in ("RGBA", "P", "CMYK", "YCbCr") else "L")
                mode = img.mode
            raw = np.asarray(img, dtype=np.float64) / 255.0
            if raw.ndim == 2:
                array = np.repeat(raw[:, :, np.newaxis], 3, axis=2)
            else:
                array = raw
    if array.ndim != 3 or array.shape[2] != 3:
        raise PreprocessError(f"{path}: decoded to unexpected shape {array.shape}")
    return array.astype(np.float32)


def resize_bilinear(array: np.ndarray, side: int) -> np.ndarray:
    """Bilinear resize of an ``(h, w, 3)`` float array to ``(side, side, 3)``."""
    if side < 1:
        raise ValueError(f"target side must be positive, got {side}")
    if array.shape[:2] == (side, side):
        return array.astype(np.float32)
    planes = []
    for channel in range(array.shape[2]):
        img = Image.fromarray(array[:, :, channel].astype(np.float32), mode="F")
        img = img.resize((side, side), resample=Image.Resampling.BILINEAR)
        planes.append(np.asarray(img, dtype=np.float32))
    return np.stack(planes, axis=2)


def standardize(array: np.ndarray, normalization: Normalization) -> np.ndarray:
    """Map a ``[0, 1]`` image to the scaling a backbone was pretrained with."""
    array = array.astype(np.float32)
    if normalization is Normalization.UNIT:
        return array
    if normalization is Normalization.IMAGENET_TF:
        return array * 2.0 - 1.0
    if normalization is Normalization.IMAGENET_CAFFE:
        bgr = array[:, :, ::-1] * 255.0
        return bgr - _CAFFE_BGR_MEANS
    raise ValueError(f"unknown normalization: {normalization!r}")


def preprocess_image(
    record: ImageRecord | str | Path,
    side: int,
    normalization: Normalization = Normalization.UNIT,
) -> np.ndarray:
    """Full input pipeline for one record: decode, resize, standardize.

    Accepts an ImageRecord (resolved through its source root) or a bare
    path.  Failures raise PreprocessError naming the record.
    """
    if isinstance(record, ImageRecord):
        name = record.id
        path = record.full_path
    else:
        path = Path(record)
        name = str(path)
    try:
        array = load_image_array(path)
    except Exception as exc:
        raise PreprocessError(f"{name}: cannot load image: {exc}") from exc
    array = resize_bilinear(array, side)
    array = standardize(array, normalization)
    if not np.all(np.isfinite(array)):
        raise PreprocessError(f"{name}: non-finite values after preprocessing")
    return array
