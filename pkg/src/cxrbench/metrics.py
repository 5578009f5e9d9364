"""Binary classification metrics over confusion counts.

The positive class is COVID-19 in all three benchmark tasks.  Metrics are
computed as exact fractions of integer counts; percent rendering rounds
half-away-from-zero to one decimal, which is the convention the bundled
reference tables follow.  Folds are pooled by summing counts first
(micro-averaging) and computing metrics from the pooled counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ConfusionCounts",
    "MetricSet",
    "confusion_from_predictions",
    "metrics_from_confusion",
    "pool_folds",
    "percent",
    "format_percent",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """TP/TN/FP/FN tallies for one evaluation, positive class = COVID-19."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "tn", "fp", "fn"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            tn=self.tn + other.tn,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class MetricSet:
    """The five benchmark criteria as fractions in [0, 1].

    A metric whose denominator is zero is ``None`` (explicitly undefined),
    never silently zero.  ``f1`` is the harmonic mean of precision and recall
    whenever both are defined and their sum is positive.
    """

    accuracy: float
    recall: float | None
    specificity: float | None
    precision: float | None
    f1: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {
            "accuracy": self.accuracy,
            "recall": self.recall,
            "specificity": self.specificity,
            "precision": self.precision,
            "f1": self.f1,
        }


def confusion_from_predictions(
    truth: Mapping[str, int], predicted: Mapping[str, int]
) -> ConfusionCounts:
    """Tally confusion counts from per-record truth and predicted labels.

    Both maps take record id to a binary label (1 = COVID-19 positive).  The
    key sets must be identical; a mismatch is a fatal error because it means
    predictions and ground truth describe different record sets.
    """
    if set(truth) != set(predicted):
        missing = sorted(set(truth) - set(predicted))[:3]
        extra = sorted(set(predicted) - set(truth))[:3]
        raise ValueError(
            f"truth/prediction key mismatch: missing {missing}, unexpected {extra}"
        )
    tp = tn = fp = fn = 0
    for record_id, actual in truth.items():
        pred = predicted[record_id]
        if actual not in (0, 1) or pred not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {actual!r}/{pred!r} for {record_id}")
        if actual == 1:
            if pred == 1:
                tp += 1
            else:
                fn += 1
        else:
            if pred == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def metrics_from_confusion(c: ConfusionCounts) -> MetricSet:
    """Compute accuracy, recall, specificity, precision and F1 from counts.

    Raises ``ValueError`` on all-zero counts.  Zero-denominator metrics are
    returned as ``None``.
    """
    if c.total == 0:
        raise ValueError("cannot compute metrics from all-zero confusion counts")
    accuracy = (c.tn + c.tp) / c.total
    recall = c.tp / c.positives if c.positives > 0 else None
    specificity = c.tn / c.negatives if c.negatives > 0 else None
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    if precision is None or recall is None or (precision + recall) == 0:
        f1 = None
    else:
        f1 = 2 * (precision * recall) / (precision + recall)
    return MetricSet(
        accuracy=accuracy,
        recall=recall,
        specificity=specificity,
        precision=precision,
        f1=f1,
    )


def pool_folds(counts: Sequence[ConfusionCounts]) -> tuple[ConfusionCounts, MetricSet]:
    """Micro-average exactly five fold evaluations.

    Counts are summed element-wise and metrics computed from the pooled
    counts, which reproduces the reference tables' Total/Average rows.
    """
    if len(counts) != 5:
        raise ValueError(f"pool_folds expects exactly 5 fold entries, got {len(counts)}")
    pooled = ConfusionCounts(tp=0, tn=0, fp=0, fn=0)
    for c in counts:
        pooled = pooled + c
    return pooled, metrics_from_confusion(pooled)


def percent(fraction: float) -> float:
    """Render a fraction as a percentage rounded half-away-from-zero to 0.1."""
    quantized = Decimal(repr(fraction * 100)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return float(quantized)


def format_percent(value: float | None) -> str:
    """Format a metric fraction as a table cell; undefined renders as 'undef'.

    100 renders bare, every other value keeps one decimal, matching the
    bundled reference tables.
    """
    if value is None:
        return "undef"
    p = percent(value)
    return "100" if p == 100 else f"{p:.1f}"
