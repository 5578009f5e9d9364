"""Training engine: per-fold fine-tuning runs and the full run matrix.

The engine is model-agnostic: anything with the small protocol from the
model zoo (``predict_proba``, ``start_training``, ``train_on_batch``) can
be driven.  Each completed fold produces a RunRecord holding the config
echo, per-epoch curves, and per-image predictions, persisted as one JSON
file so a matrix can resume after interruption by skipping finished runs.

Two invariants are enforced on every single fold, not spot-checked:
train and test ids must be disjoint, and the prediction set must cover
exactly the test ids.
"""

from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .folds import FoldAssignment, fold_split
from .preprocess import Normalization, preprocess_image
from .records import BinaryDataset, ImageRecord

__all__ = [
    "DEFAULT_SEED",
    "TrainConfig",
    "EpochLog",
    "RunRecord",
    "LeakageError",
    "NonFiniteLossError",
    "ImageSource",
    "ArrayImageSource",
    "RecordImageSource",
    "fold_sources",
    "predict",
    "train_fold",
    "run_name",
    "save_run_record",
    "load_run_record",
    "RunTask",
    "plan_runs",
    "MatrixResult",
    "run_matrix",
]

DEFAULT_SEED = 2020


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults are the reference protocol."""

    learning_rate: float = 1e-5
    batch_size: int = 3
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must be in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")

    def overrides(self) -> list[str]:
        """Fields that deviate from the reference protocol, spelled out."""
        reference = TrainConfig()
        deviations = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            default = getattr(reference, f.name)
            if value != default:
                deviations.append(f"{f.name}={value} (reference {default})")
        return deviations

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @staticmethod
    def from_dict(data: Mapping) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in data.items() if k in known})


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    train_accuracy: float
    test_accuracy: float


class LeakageError(AssertionError):
    """Train/test contamination; always a bug, never recoverable."""


class NonFiniteLossError(RuntimeError):
    """Training diverged to NaN or infinity."""


class ImageSource(Protocol):
    """A fixed, ordered collection of images the engine can batch-load."""

    @property
    def ids(self) -> Sequence[str]: ...

    @property
    def labels(self) -> Sequence[int]: ...

    def load(self, indices: Sequence[int]) -> np.ndarray: ...


class ArrayImageSource:
    """In-memory source, used for synthetic data and tests."""

    def __init__(self, ids: Sequence[str], images: np.ndarray, labels: Sequence[int]) -> None:
        if not (len(ids) == len(images) == len(labels)):
            raise ValueError("ids, images, and labels must have equal length")
        self._ids = list(ids)
        self._images = np.asarray(images)
        self._labels = [int(v) for v in labels]

    @property
    def ids(self) -> Sequence[str]:
        return self._ids

    @property
    def labels(self) -> Sequence[int]:
        return self._labels

    def load(self, indices: Sequence[int]) -> np.ndarray:
        return self._images[np.asarray(indices, dtype=np.intp)]

    def __len__(self) -> int:
        return len(self._ids)


class RecordImageSource:
    """Disk-backed source that preprocesses records on demand."""

    def __init__(
        self,
        records: Sequence[ImageRecord],
        labels: Sequence[int],
        side: int,
        normalization: Normalization,
    ) -> None:
        if len(records) != len(labels):
            raise ValueError("records and labels must have equal length")
        self._records = list(records)
        self._labels = [int(v) for v in labels]
        self.side = side
        self.normalization = normalization

    @property
    def ids(self) -> Sequence[str]:
        return [r.id for r in self._records]

    @property
    def labels(self) -> Sequence[int]:
        return self._labels

    def load(self, indices: Sequence[int]) -> np.ndarray:
        return np.stack(
            [
                preprocess_image(self._records[i], self.side, self.normalization)
                for i in indices
            ]
        )

    def __len__(self) -> int:
        return len(self._records)


def fold_sources(
    dataset: BinaryDataset,
    assignment: FoldAssignment,
    fold: int,
    side: int,
    normalization: Normalization,
) -> tuple[RecordImageSource, RecordImageSource]:
    """Disk-backed train/test sources for one fold of one dataset."""
    train_ids, test_ids = fold_split(assignment, fold)
    train = dataset.subset(train_ids)
    test = dataset.subset(test_ids)
    return (
        RecordImageSource(train.records, train.labels, side, normalization),
        RecordImageSource(test.records, test.labels, side, normalization),
    )


def _check_no_leakage(train_ids: Sequence[str], test_ids: Sequence[str]) -> None:
    overlap = set(train_ids) & set(test_ids)
    if overlap:
        raise LeakageError(
            f"train/test overlap on {len(overlap)} ids, e.g. {sorted(overlap)[:3]}"
        )


def predict(
    model, source: ImageSource, batch_size: int = 16
) -> dict[str, tuple[int, float]]:
    """Predictions for every image in the source.

    Returns ``id -> (label, positive probability)``; an exact tie between
    the two classes resolves to the positive class.
    """
    ids = list(source.ids)
    out: dict[str, tuple[int, float]] = {}
    for start in range(0, len(ids), batch_size):
        indices = range(start, min(start + batch_size, len(ids)))
        probs = model.predict_proba(source.load(list(indices)))
        for offset, i in enumerate(indices):
            p_neg, p_pos = float(probs[offset, 0]), float(probs[offset, 1])
            out[ids[i]] = (1 if p_pos >= p_neg else 0, p_pos)
    return out


def _accuracy(predictions: Mapping[str, tuple[int, float]], source: ImageSource) -> float:
    truth = dict(zip(source.ids, source.labels))
    correct = sum(1 for rid, (label, _) in predictions.items() if truth[rid] == label)
    return correct / len(truth)


@dataclass(frozen=True)
class RunRecord:
    """Everything one (backbone, dataset, fold) run produced."""

    backbone: str
    dataset: str
    fold: int
    seed: int
    config: TrainConfig
    config_overrides: tuple[str, ...]
    train_size: int
    test_size: int
    epochs: tuple[EpochLog, ...]
    predictions: dict[str, tuple[int, float]]
    truth: dict[str, int]
    wall_time_s: float

    @property
    def name(self) -> str:
        return run_name(self.backbone, self.dataset, self.fold)

    def predicted_labels(self) -> dict[str, int]:
        return {rid: label for rid, (label, _) in self.predictions.items()}

    def confusion(self):
        from .metrics import confusion_from_predictions

        return confusion_from_predictions(self.truth, self.predicted_labels())

    @property
    def final_test_accuracy(self) -> float | None:
        return self.epochs[-1].test_accuracy if self.epochs else None


def train_fold(
    model,
    train_source: ImageSource,
    test_source: ImageSource,
    config: TrainConfig,
    dataset_name: str,
    fold: int,
) -> RunRecord:
    """Fine-tune one model on one fold and evaluate on the held-out part."""
    _check_no_leakage(train_source.ids, test_source.ids)
    started = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    labels = np.asarray(train_source.labels, dtype=np.int64)
    n = len(labels)
    if n == 0:
        raise ValueError("training source is empty")

    model.start_training(config)
    logs: list[EpochLog] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        loss_sum = 0.0
        correct_sum = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            x = train_source.load(batch.tolist())
            loss, accuracy = model.train_on_batch(x, labels[batch])
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    f"{model.name} on {dataset_name} fold {fold}: loss {loss} "
                    f"at epoch {epoch}, batch starting {start}"
                )
            loss_sum += loss * len(batch)
            correct_sum += accuracy * len(batch)
        test_predictions = predict(model, test_source)
        logs.append(
            EpochLog(
                epoch=epoch,
                train_loss=loss_sum / n,
                train_accuracy=correct_sum / n,
                test_accuracy=_accuracy(test_predictions, test_source),
            )
        )

    predictions = predict(model, test_source)
    if set(predictions) != set(test_source.ids):
        raise LeakageError("prediction ids do not match the held-out fold exactly")
    return RunRecord(
        backbone=model.name,
        dataset=dataset_name,
        fold=fold,
        seed=config.seed,
        config=config,
        config_overrides=tuple(config.overrides()),
        train_size=n,
        test_size=len(list(test_source.ids)),
        epochs=tuple(logs),
        predictions=predictions,
        truth={rid: int(lab) for rid, lab in zip(test_source.ids, test_source.labels)},
        wall_time_s=time.perf_counter() - started,
    )


# -- run record persistence -------------------------------------------------

def run_name(backbone: str, dataset: str, fold: int) -> str:
    return f"{backbone}_{dataset}_fold{fold}"


def save_run_record(record: RunRecord, directory: str | Path) -> Path:
    """Atomic write of one run's JSON file; safe against interruption."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "backbone": record.backbone,
        "dataset": record.dataset,
        "fold": record.fold,
        "seed": record.seed,
        "config": record.config.to_dict(),
        "config_overrides": list(record.config_overrides),
        "train_size": record.train_size,
        "test_size": record.test_size,
        "epochs": [dataclasses.asdict(e) for e in record.epochs],
        "predictions": {rid: [label, prob] for rid, (label, prob) in record.predictions.items()},
        "truth": record.truth,
        "wall_time_s": record.wall_time_s,
    }
    path = directory / f"{record.name}.run"
    tmp = path.with_suffix(".run.tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    return path


def load_run_record(path: str | Path) -> RunRecord:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    try:
        return RunRecord(
            backbone=data["backbone"],
            dataset=data["dataset"],
            fold=int(data["fold"]),
            seed=int(data["seed"]),
            config=TrainConfig.from_dict(data["config"]),
            config_overrides=tuple(data["config_overrides"]),
            train_size=int(data["train_size"]),
            test_size=int(data["test_size"]),
            epochs=tuple(EpochLog(**e) for e in data["epochs"]),
            predictions={
                rid: (int(label), float(prob))
                for rid, (label, prob) in data["predictions"].items()
            },
            truth={rid: int(label) for rid, label in data["truth"].items()},
            wall_time_s=float(data["wall_time_s"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed run record {path}: {exc}") from exc


# -- the full matrix ---------------------------------------------------------

@dataclass(frozen=True)
class RunTask:
    backbone: str
    dataset: str
    fold: int


def plan_runs(
    backbones: Sequence[str], datasets: Sequence[str], folds: Sequence[int]
) -> list[RunTask]:
    return [
        RunTask(backbone, dataset, fold)
        for backbone in backbones
        for dataset in datasets
        for fold in folds
    ]


@dataclass
class MatrixResult:
    records: list[RunRecord] = field(default_factory=list)
    trained: int = 0
    skipped: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)


def run_matrix(
    tasks: Sequence[RunTask],
    model_factory: Callable[[RunTask], object],
    sources_factory: Callable[[RunTask, object], tuple[ImageSource, ImageSource]],
    config: TrainConfig,
    out_dir: str | Path,
    checkpoint_dir: str | Path | None = None,
    progress: Callable[[str], None] | None = None,
) -> MatrixResult:
    """Execute (or resume) a set of runs, one persisted record per task.

    A task whose run file already exists is loaded and skipped.  A task
    that fails is recorded and the matrix moves on; leakage is the one
    error that aborts everything.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = MatrixResult()
    say = progress or (lambda message: None)
    for task in tasks:
        name = run_name(task.backbone, task.dataset, task.fold)
        path = out_dir / f"{name}.run"
        if path.exists():
            result.records.append(load_run_record(path))
            result.skipped += 1
            say(f"{name}: already done, skipping")
            continue
        say(f"{name}: training")
        try:
            model = model_factory(task)
            train_source, test_source = sources_factory(task, model)
            record = train_fold(
                model, train_source, test_source, config, task.dataset, task.fold
            )
        except LeakageError:
            raise
        except Exception as exc:
            result.failures.append((name, f"{type(exc).__name__}: {exc}"))
            say(f"{name}: FAILED ({exc})")
            continue
        save_run_record(record, out_dir)
        if checkpoint_dir is not None:
            checkpoint_dir = Path(checkpoint_dir)
            checkpoint_dir.mkdir(parents=True, exist_ok=True)
            model.save_weights(checkpoint_dir / f"{name}{model.weights_suffix}")
        result.records.append(record)
        result.trained += 1
        say(f"{name}: done in {record.wall_time_s:.1f}s")
    return result
