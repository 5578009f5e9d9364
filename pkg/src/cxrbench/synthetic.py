"""Bundled synthetic data so every pipeline path runs with no downloads.

Two flavors:

* in-memory separable arrays (``synthetic_arrays``) for fast training
  smoke tests: the positive class is bright, the negative class dark,
  with enough noise to make the task non-degenerate;
* on-disk fake source trees (``write_synthetic_sources``) mimicking the
  layout and labeling conventions of the three real sources, including
  the awkward cases ingestion must skip (a CT row, a non-target finding,
  an unreadable file, a duplicate payload, unlabelable filenames).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .folds import FoldAssignment, fold_split
from .records import SourceKind
from .training import ArrayImageSource

__all__ = [
    "SyntheticData",
    "synthetic_arrays",
    "write_synthetic_sources",
]

_POSITIVE_LEVEL = 0.78
_NEGATIVE_LEVEL = 0.22
_NOISE = 0.08


@dataclass(frozen=True)
class SyntheticData:
    """In-memory two-class image collection, ordered by id."""

    name: str
    ids: tuple[str, ...]
    labels: tuple[int, ...]
    images: np.ndarray  # (n, side, side, 3) float32 in [0, 1]

    def source(self) -> ArrayImageSource:
        return ArrayImageSource(list(self.ids), self.images, list(self.labels))

    def subset_source(self, wanted_ids: Sequence[str]) -> ArrayImageSource:
        index = {rid: i for i, rid in enumerate(self.ids)}
        missing = [rid for rid in wanted_ids if rid not in index]
        if missing:
            raise KeyError(f"unknown synthetic ids: {missing[:3]}")
        rows = [index[rid] for rid in wanted_ids]
        return ArrayImageSource(
            list(wanted_ids), self.images[rows], [self.labels[i] for i in rows]
        )

    def fold_sources(
        self, assignment: FoldAssignment, fold: int
    ) -> tuple[ArrayImageSource, ArrayImageSource]:
        train_ids, test_ids = fold_split(assignment, fold)
        return self.subset_source(train_ids), self.subset_source(test_ids)

    def __len__(self) -> int:
        return len(self.ids)


def _class_images(
    n: int, side: int, level: float, rng: np.random.Generator
) -> np.ndarray:
    base = rng.normal(level, _NOISE, size=(n, side, side, 3))
    return np.clip(base, 0.0, 1.0).astype(np.float32)


def synthetic_arrays(
    n_per_class: int = 15, side: int = 32, seed: int = 0, name: str = "synthetic"
) -> SyntheticData:
    """Separable two-class arrays; class 1 is bright, class 0 is dark."""
    if n_per_class < 5:
        raise ValueError("need at least 5 images per class for 5-fold splitting")
    rng = np.random.default_rng(seed)
    negatives = _class_images(n_per_class, side, _NEGATIVE_LEVEL, rng)
    positives = _class_images(n_per_class, side, _POSITIVE_LEVEL, rng)
    ids = [f"{name}/neg-{i:03d}" for i in range(n_per_class)]
    ids += [f"{name}/pos-{i:03d}" for i in range(n_per_class)]
    labels = [0] * n_per_class + [1] * n_per_class
    images = np.concatenate([negatives, positives], axis=0)
    order = np.argsort(ids)
    return SyntheticData(
        name=name,
        ids=tuple(ids[i] for i in order),
        labels=tuple(labels[i] for i in order),
        images=images[order],
    )


def _save_image(array: np.ndarray, path: Path, bit16: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if bit16:
        plane = (array[:, :, 0] * 65535).round().astype(np.uint16)
        Image.fromarray(plane).save(path)
    else:
        Image.fromarray((array * 255).round().astype(np.uint8), mode="RGB").save(path)


def write_synthetic_sources(
    root: str | Path,
    seed: int = 0,
    side: int = 48,
    covid: int = 11,
    normal: int = 13,
    viral: int = 9,
    bacterial: int = 10,
) -> dict[SourceKind, Path]:
    """Write three fake source trees under ``root`` and return their paths.

    The trees follow the real sources' conventions closely enough to
    exercise every ingestion branch: COVID images are listed in a
    metadata table (with one CT and one non-target-finding row to
    exclude), the pneumonia tree encodes labels in filenames (with
    unlabelable extras), and the healthy tree contains one corrupt file
    and one duplicated payload.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)

    covid_root = root / "covid_repo"
    images_dir = covid_root / "images"
    rows = []
    for i, image in enumerate(_class_images(covid, side, _POSITIVE_LEVEL, rng)):
        filename = f"covid-{i:03d}.png"
        _save_image(image, images_dir / filename)
        rows.append((filename, "COVID-19", "X-ray"))
    _save_image(_class_images(1, side, _POSITIVE_LEVEL, rng)[0], images_dir / "ct-scan.png")
    rows.append(("ct-scan.png", "COVID-19", "CT"))
    _save_image(_class_images(1, side, _POSITIVE_LEVEL, rng)[0], images_dir / "sars-case.png")
    rows.append(("sars-case.png", "SARS", "X-ray"))
    _save_image(_class_images(1, side, _POSITIVE_LEVEL, rng)[0], images_dir / "orphan.png")
    covid_root.mkdir(parents=True, exist_ok=True)
    with (covid_root / "metadata.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["patientid", "finding", "modality", "filename"])
        for i, (filename, finding, modality) in enumerate(rows):
            writer.writerow([str(i), finding, modality, filename])

    xray8_root = root / "chestxray8"
    normal_images = _class_images(normal, side, _NEGATIVE_LEVEL, rng)
    for i, image in enumerate(normal_images):
        bit16 = i == 1  # one 16-bit grayscale file to exercise the loader
        _save_image(image, xray8_root / f"normal-{i:03d}.png", bit16=bit16)
    (xray8_root / "broken.png").write_bytes(b"this is not image data")
    # sorts after the original, so the copy is the one flagged as duplicate
    (xray8_root / "zz-copy-of-000.png").write_bytes((xray8_root / "normal-000.png").read_bytes())
    (xray8_root / "notes.txt").write_text("acquisition notes\n", encoding="utf-8")

    kaggle_root = root / "kaggle_pneumonia"
    pneumonia_dir = kaggle_root / "train" / "PNEUMONIA"
    for i, image in enumerate(_class_images(bacterial, side, _NEGATIVE_LEVEL, rng)):
        _save_image(image, pneumonia_dir / f"person{i}_bacteria_{i + 1}.jpeg")
    for i, image in enumerate(_class_images(viral, side, _NEGATIVE_LEVEL, rng)):
        _save_image(image, pneumonia_dir / f"person{i}_virus_{i + 1}.jpeg")
    normal_dir = kaggle_root / "train" / "NORMAL"
    for i, image in enumerate(_class_images(2, side, _NEGATIVE_LEVEL, rng)):
        _save_image(image, normal_dir / f"IM-{i:04d}-0001.jpeg")

    return {
        SourceKind.COVID_REPO: covid_root,
        SourceKind.CHESTXRAY8: xray8_root,
        SourceKind.KAGGLE_PNEUMONIA: kaggle_root,
    }
