"""Benchmark harness for binary COVID-19 chest X-ray classification.

Rebuilds a published evaluation protocol end to end: ingestion of three
public image sources, three binary datasets (COVID-19 vs normal, viral
pneumonia, and bacterial pneumonia), deterministic stratified 5-fold
cross-validation, fine-tuning of five pretrained CNN backbones plus a
from-scratch reference CNN, confusion-count metrics with fold pooling,
and validation against the published result tables bundled as fixtures.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .folds import assign_folds, fold_sizes, fold_split, load_fold_file, save_fold_file
from .metrics import (
    ConfusionCounts,
    MetricSet,
    confusion_from_predictions,
    format_percent,
    metrics_from_confusion,
    pool_folds,
)
from .records import (
    DATASET_SPECS,
    BinaryDataset,
    ClassLabel,
    DatasetSpec,
    ImageRecord,
    Manifest,
    SourceKind,
    build_dataset,
    load_manifest,
    save_manifest,
)
from .reference import load_reference_rows, validate_reference_rows
from .training import (
    DEFAULT_SEED,
    RunRecord,
    TrainConfig,
    load_run_record,
    run_matrix,
    save_run_record,
    train_fold,
)

__all__ = [
    "__version__",
    "DEFAULT_SEED",
    "DATASET_SPECS",
    "BinaryDataset",
    "ClassLabel",
    "ConfusionCounts",
    "DatasetSpec",
    "ImageRecord",
    "Manifest",
    "MetricSet",
    "RunRecord",
    "SourceKind",
    "TrainConfig",
    "assign_folds",
    "build_dataset",
    "confusion_from_predictions",
    "fold_sizes",
    "fold_split",
    "format_percent",
    "load_fold_file",
    "load_manifest",
    "load_reference_rows",
    "load_run_record",
    "metrics_from_confusion",
    "pool_folds",
    "run_matrix",
    "save_fold_file",
    "save_manifest",
    "save_run_record",
    "train_fold",
    "validate_reference_rows",
]
