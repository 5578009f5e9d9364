"""Result rendering: metric tables, training/testing curves, comparison table.

Every artifact this module writes embeds the run seed, the config digest,
and the tool version, so any file found on disk can be traced back to the
invocation that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .metrics import (
    ConfusionCounts,
    MetricSet,
    format_percent,
    metrics_from_confusion,
    pool_folds,
)
from .records import DATASET_SPECS
from .reference import load_reference_rows
from .training import RunRecord

__all__ = [
    "ArtifactMeta",
    "LITERATURE_RESULTS",
    "fold_metric_rows",
    "metric_table_text",
    "write_metric_tables",
    "comparison_table_text",
    "write_comparison_table",
    "write_curve_files",
    "write_overlay_plots",
]

_METRIC_HEADER = ("tp", "tn", "fp", "fn", "acc", "rec", "spe", "pre", "f1")

# Static comparison data: published accuracies of other COVID-19 chest
# X-ray classifiers (study, method, class count, accuracy as published).
LITERATURE_RESULTS: tuple[tuple[str, str, str, str], ...] = (
    ("Das et al.", "Xception", "3", "97.40"),
    ("Singh et al.", "MADE based CNN", "2", "92.55"),
    ("Afshar et al.", "Capsule Networks", "4", "95.7"),
    ("Ucar and Korkmaz", "Bayes-SqueezeNet", "3", "98.3"),
    ("Khan et al.", "CoroNet", "4", "89.60"),
    ("Sahinbas and Catak", "VGG16, VGG19, ResNet, DenseNet, InceptionV3", "2", "80"),
    ("Medhi et al.", "Deep CNN", "2", "93"),
    ("Zhang et al.", "CAAD", "2", "95.18"),
    ("Apostopolus et al.", "VGG-19", "3", "93.48"),
    ("Narin et al.", "InceptionV3, ResNet50, Inception-ResNetV2", "2", "98"),
)

_TASK_DESCRIPTIONS = {
    "dataset1": "2 (COVID-19 / Normal)",
    "dataset2": "2 (COVID-19 / Viral Pneumonia)",
    "dataset3": "2 (COVID-19 / Bacterial Pneumonia)",
}


@dataclass(frozen=True)
class ArtifactMeta:
    """Provenance stamped into every artifact."""

    seed: int
    config_digest: str
    version: str

    def header_lines(self) -> list[str]:
        return [
            f"# seed={self.seed}",
            f"# config-digest={self.config_digest}",
            f"# version={self.version}",
        ]

    def as_mapping(self) -> dict[str, str]:
        return {
            "seed-echo": str(self.seed),
            "config-digest": self.config_digest,
            "version": self.version,
        }

    def footnote(self) -> str:
        return f"seed {self.seed} | config {self.config_digest} | v{self.version}"


def _by_backbone_and_dataset(
    records: Iterable[RunRecord],
) -> dict[tuple[str, str], list[RunRecord]]:
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for record in records:
        groups.setdefault((record.backbone, record.dataset), []).append(record)
    for group in groups.values():
        group.sort(key=lambda r: r.fold)
    return groups


def fold_metric_rows(
    records: Sequence[RunRecord],
) -> list[tuple[str, ConfusionCounts, MetricSet]]:
    """Per-fold metric rows for one (backbone, dataset) group, plus the
    pooled row when all five folds are present."""
    rows: list[tuple[str, ConfusionCounts, MetricSet]] = []
    fold_counts: list[ConfusionCounts] = []
    for record in sorted(records, key=lambda r: r.fold):
        counts = record.confusion()
        fold_counts.append(counts)
        rows.append((str(record.fold), counts, metrics_from_confusion(counts)))
    if len(fold_counts) == 5:
        pooled_counts, pooled_metrics = pool_folds(fold_counts)
        rows.append(("pooled", pooled_counts, pooled_metrics))
    return rows


def _format_row(model: str, fold: str, counts: ConfusionCounts, metrics: MetricSet) -> str:
    cells = [f"{model:<20}", f"{fold:>6}"]
    cells += [f"{v:>6}" for v in (counts.tp, counts.tn, counts.fp, counts.fn)]
    cells += [
        f"{format_percent(v):>6}"
        for v in (metrics.accuracy, metrics.recall, metrics.specificity,
                  metrics.precision, metrics.f1)
    ]
    return " ".join(cells)


def metric_table_text(
    dataset: str, records: Sequence[RunRecord], meta: ArtifactMeta
) -> str:
    """One dataset's results for every backbone present, reference layout."""
    spec = DATASET_SPECS.get(dataset)
    task = (
        f"{spec.positive_label.value} vs {spec.negative_label.value}"
        if spec
        else "custom task"
    )
    lines = [f"# dataset={dataset} ({task})"]
    lines += meta.header_lines()
    lines.append("")
    header_cells = [f"{'model':<20}", f"{'fold':>6}"]
    header_cells += [f"{name:>6}" for name in _METRIC_HEADER]
    lines.append(" ".join(header_cells))
    groups = _by_backbone_and_dataset(r for r in records if r.dataset == dataset)
    for (backbone, _), group in sorted(groups.items()):
        for fold_label, counts, metrics in fold_metric_rows(group):
            lines.append(_format_row(backbone, fold_label, counts, metrics))
        if len(group) != 5:
            lines.append(f"# {backbone}: pooled row needs 5 folds, have {len(group)}")
    return "\n".join(lines) + "\n"


def write_metric_tables(
    records: Sequence[RunRecord], out_dir: str | Path, meta: ArtifactMeta
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for dataset in sorted({r.dataset for r in records}):
        path = out_dir / f"metrics_{dataset}.txt"
        path.write_text(metric_table_text(dataset, records, meta), encoding="utf-8")
        written.append(path)
    return written


# -- literature comparison ----------------------------------------------------

def _reference_pooled_rows() -> list[tuple[str, str, str, str]]:
    """Best published pooled rows of the benchmark being reproduced."""
    rows = []
    by_dataset: dict[str, float] = {}
    for row in load_reference_rows():
        if row.model == "resnet50" and row.fold == "pooled":
            by_dataset[row.dataset] = row.published["acc"]
    for dataset in sorted(by_dataset):
        rows.append(
            (
                "reference benchmark",
                "ResNet50, 5-fold pooled",
                _TASK_DESCRIPTIONS.get(dataset, dataset),
                f"{by_dataset[dataset]:.1f}",
            )
        )
    return rows


def this_run_rows(records: Sequence[RunRecord]) -> list[tuple[str, str, str, str]]:
    """Best pooled accuracy per dataset across whatever runs exist."""
    rows = []
    groups = _by_backbone_and_dataset(records)
    best: dict[str, tuple[float, str, int]] = {}
    for (backbone, dataset), group in sorted(groups.items()):
        pooled = sum((r.confusion() for r in group), start=ConfusionCounts(0, 0, 0, 0))
        accuracy = metrics_from_confusion(pooled).accuracy
        current = best.get(dataset)
        if current is None or accuracy > current[0]:
            best[dataset] = (accuracy, backbone, len(group))
    for dataset in sorted(best):
        accuracy, backbone, n_folds = best[dataset]
        rows.append(
            (
                "this run",
                f"{backbone}, {n_folds}-fold pooled",
                _TASK_DESCRIPTIONS.get(dataset, dataset),
                format_percent(accuracy),
            )
        )
    return rows


def comparison_table_text(records: Sequence[RunRecord], meta: ArtifactMeta) -> str:
    lines = ["# COVID-19 chest X-ray classifier comparison"]
    lines += meta.header_lines()
    lines.append("")
    lines.append(
        f"{'study':<22} {'data':<6} {'method':<46} {'classes':<34} {'accuracy (%)':>12}"
    )
    all_rows = [
        (study, "X-ray", method, classes, accuracy)
        for study, method, classes, accuracy in LITERATURE_RESULTS
    ]
    all_rows += [
        (study, "X-ray", method, classes, accuracy)
        for study, method, classes, accuracy in _reference_pooled_rows()
    ]
    all_rows += [
        (study, "X-ray", method, classes, accuracy)
        for study, method, classes, accuracy in this_run_rows(records)
    ]
    for study, data, method, classes, accuracy in all_rows:
        lines.append(f"{study:<22} {data:<6} {method:<46} {classes:<34} {accuracy:>12}")
    return "\n".join(lines) + "\n"


def write_comparison_table(
    records: Sequence[RunRecord], out_dir: str | Path, meta: ArtifactMeta
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "comparison.txt"
    path.write_text(comparison_table_text(records, meta), encoding="utf-8")
    return path


# -- curves -------------------------------------------------------------------

_QUANTITIES = (
    ("train_accuracy", "training accuracy"),
    ("train_loss", "training loss"),
    ("test_accuracy", "testing accuracy"),
)


def _by_dataset_and_fold(records: Iterable[RunRecord]) -> dict[tuple[str, int], list[RunRecord]]:
    groups: dict[tuple[str, int], list[RunRecord]] = {}
    for record in records:
        if record.epochs:
            groups.setdefault((record.dataset, record.fold), []).append(record)
    for group in groups.values():
        group.sort(key=lambda r: r.backbone)
    return groups


def _curve(record: RunRecord, quantity: str) -> list[float]:
    return [getattr(log, quantity) for log in record.epochs]


def write_curve_files(
    records: Sequence[RunRecord], out_dir: str | Path, meta: ArtifactMeta
) -> list[Path]:
    """Tab-separated curve data, one file per (dataset, fold, quantity)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for (dataset, fold), group in sorted(_by_dataset_and_fold(records).items()):
        epochs = max(len(r.epochs) for r in group)
        for quantity, _ in _QUANTITIES:
            path = out_dir / f"{dataset}_fold{fold}_{quantity}.tsv"
            lines = meta.header_lines()
            lines.append("\t".join(["epoch"] + [r.backbone for r in group]))
            columns = {r.backbone: _curve(r, quantity) for r in group}
            for epoch in range(1, epochs + 1):
                cells = [str(epoch)]
                for record in group:
                    curve = columns[record.backbone]
                    cells.append(f"{curve[epoch - 1]:.6f}" if epoch <= len(curve) else "")
                lines.append("\t".join(cells))
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            written.append(path)
    return written


def write_overlay_plots(
    records: Sequence[RunRecord], out_dir: str | Path, meta: ArtifactMeta
) -> list[Path]:
    """Per-(dataset, fold) PNGs overlaying every model's curve per quantity."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for (dataset, fold), group in sorted(_by_dataset_and_fold(records).items()):
        for quantity, label in _QUANTITIES:
            fig, ax = plt.subplots(figsize=(7, 4.5))
            for record in group:
                curve = _curve(record, quantity)
                ax.plot(range(1, len(curve) + 1), curve, label=record.backbone)
            ax.set_xlabel("epoch")
            ax.set_ylabel(label)
            ax.set_title(f"{dataset} fold {fold}: {label}")
            ax.legend(loc="best", fontsize="small")
            fig.text(0.99, 0.01, meta.footnote(), ha="right", fontsize=6, color="gray")
            fig.tight_layout()
            path = out_dir / f"{dataset}_fold{fold}_{quantity}.png"
            fig.savefig(path, dpi=110)
            plt.close(fig)
            written.append(path)
    return written
