"""Bundled reference results and validation against them.

The package ships the 90 published per-fold result rows of the reference
study this harness reproduces: 5 models x 3 binary datasets x (5 folds + 1
pooled Total/Average row), each carrying the confusion counts and the five
reported percentages.  Validation recomputes every row's metrics from its
own counts and flags any metric further than the tolerance from the
published percentage.  Discrepancies are data, not exceptions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import ConfusionCounts, metrics_from_confusion, percent

__all__ = [
    "ReferenceRow",
    "Discrepancy",
    "MODEL_NAMES",
    "DATASET_NAMES",
    "load_reference_rows",
    "validate_reference_rows",
    "render_discrepancy_report",
    "pooled_counts_match_fold_sums",
]

MODEL_NAMES = (
    "inceptionv3",
    "resnet50",
    "resnet101",
    "resnet152",
    "inception_resnetv2",
)
DATASET_NAMES = ("dataset1", "dataset2", "dataset3")

METRIC_COLUMNS = ("acc", "rec", "spe", "pre", "f1")

_DATA_PACKAGE = "cxrbench._data"
_DATA_FILE = "reference_results.tsv"


@dataclass(frozen=True)
class ReferenceRow:
    """One published result row: counts plus the five reported percentages."""

    model: str
    dataset: str
    fold: str  # "1".."5" or "pooled"
    counts: ConfusionCounts
    published: dict[str, float]  # keys: acc, rec, spe, pre, f1 (percent)

    @property
    def key(self) -> str:
        return f"{self.model}/{self.dataset}/fold={self.fold}"


@dataclass(frozen=True)
class Discrepancy:
    """A metric whose recomputed value disagrees with the published one."""

    row_key: str
    metric: str
    published: float
    recomputed: float | None

    @property
    def delta(self) -> float | None:
        if self.recomputed is None:
            return None
        return self.recomputed - self.published

    def __str__(self) -> str:
        if self.recomputed is None:
            return f"{self.row_key} {self.metric}: published {self.published}, recomputed undefined"
        return (
            f"{self.row_key} {self.metric}: published {self.published}, "
            f"recomputed {self.recomputed:.2f} (delta {self.delta:+.2f} pp)"
        )


def _parse_rows(lines: Iterable[str]) -> list[ReferenceRow]:
    reader = csv.DictReader(lines, delimiter="\t")
    rows = []
    for raw in reader:
        counts = ConfusionCounts(
            tp=int(raw["tp"]), tn=int(raw["tn"]), fp=int(raw["fp"]), fn=int(raw["fn"])
        )
        published = {m: float(raw[m]) for m in METRIC_COLUMNS}
        rows.append(
            ReferenceRow(
                model=raw["model"],
                dataset=raw["dataset"],
                fold=raw["fold"],
                counts=counts,
                published=published,
            )
        )
    return rows


def load_reference_rows(path: str | Path | None = None) -> list[ReferenceRow]:
    """Load reference rows from ``path`` or the bundled fixture."""
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"reference results file not found: {path}")
        with path.open(encoding="utf-8", newline="") as fh:
            return _parse_rows(fh)
    text = resources.files(_DATA_PACKAGE).joinpath(_DATA_FILE).read_text(encoding="utf-8")
    return _parse_rows(text.splitlines())


def validate_reference_rows(
    rows: Sequence[ReferenceRow], tolerance_pp: float = 0.1
) -> list[Discrepancy]:
    """Recompute each row's metrics from its counts; flag rows out of tolerance.

    The comparison is in percentage points against the published values.  A
    float guard of 1e-9 keeps exactly-at-tolerance values inside.
    """
    discrepancies: list[Discrepancy] = []
    for row in rows:
        computed = metrics_from_confusion(row.counts)
        recomputed_pct = {
            "acc": computed.accuracy,
            "rec": computed.recall,
            "spe": computed.specificity,
            "pre": computed.precision,
            "f1": computed.f1,
        }
        for metric in METRIC_COLUMNS:
            value = recomputed_pct[metric]
            published = row.published[metric]
            if value is None:
                discrepancies.append(Discrepancy(row.key, metric, published, None))
                continue
            if abs(value * 100 - published) > tolerance_pp + 1e-9:
                discrepancies.append(Discrepancy(row.key, metric, published, value * 100))
    return discrepancies


def pooled_counts_match_fold_sums(rows: Sequence[ReferenceRow]) -> list[str]:
    """Check each (model, dataset) pooled row equals the sum of its fold rows.

    Returns human-readable mismatch descriptions (empty when all 15 pooled
    rows are exact sums).
    """
    mismatches: list[str] = []
    by_group: dict[tuple[str, str], dict[str, ConfusionCounts]] = {}
    for row in rows:
        by_group.setdefault((row.model, row.dataset), {})[row.fold] = row.counts
    for (model, dataset), folds in sorted(by_group.items()):
        if "pooled" not in folds:
            mismatches.append(f"{model}/{dataset}: no pooled row")
            continue
        fold_rows = [folds[str(k)] for k in range(1, 6) if str(k) in folds]
        if len(fold_rows) != 5:
            mismatches.append(f"{model}/{dataset}: expected 5 fold rows, got {len(fold_rows)}")
            continue
        total = ConfusionCounts(0, 0, 0, 0)
        for c in fold_rows:
            total = total + c
        if total != folds["pooled"]:
            mismatches.append(
                f"{model}/{dataset}: fold sum {total} != pooled row {folds['pooled']}"
            )
    return mismatches


def render_discrepancy_report(
    rows: Sequence[ReferenceRow], discrepancies: Sequence[Discrepancy]
) -> str:
    lines = [
        f"reference rows checked: {len(rows)}",
        f"discrepancies: {len(discrepancies)}",
    ]
    lines.extend(str(d) for d in discrepancies)
    return "\n".join(lines) + "\n"
