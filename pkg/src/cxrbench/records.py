"""Domain types: image records, manifests, and the three binary datasets.

A manifest is the unified, deterministically ordered view of the three
public image sources.  Record ids are ``<source>/<relative posix path>``,
and every consumer downstream (dataset builders, fold assignment) anchors
its determinism in the lexicographic id ordering.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path, PurePosixPath
from typing import Iterable, Mapping, Sequence

__all__ = [
    "SourceKind",
    "ClassLabel",
    "SOURCE_LABELS",
    "REFERENCE_CLASS_COUNTS",
    "ImageRecord",
    "Manifest",
    "DatasetSpec",
    "DATASET_SPECS",
    "BinaryDataset",
    "MissingClassError",
    "build_dataset",
    "save_manifest",
    "load_manifest",
    "provenance_report",
]


class SourceKind(str, Enum):
    COVID_REPO = "covid_repo"
    CHESTXRAY8 = "chestxray8"
    KAGGLE_PNEUMONIA = "kaggle_pneumonia"


class ClassLabel(str, Enum):
    COVID19 = "covid19"
    NORMAL = "normal"
    BACTERIAL = "bacterial"
    VIRAL = "viral"


# Which labels may legitimately come from which source.
SOURCE_LABELS: dict[SourceKind, frozenset[ClassLabel]] = {
    SourceKind.COVID_REPO: frozenset({ClassLabel.COVID19}),
    SourceKind.CHESTXRAY8: frozenset({ClassLabel.NORMAL}),
    SourceKind.KAGGLE_PNEUMONIA: frozenset({ClassLabel.BACTERIAL, ClassLabel.VIRAL}),
}

# Image counts of the reference snapshot of the three sources.  The public
# repositories keep growing, so these are advisory: deviations produce
# warnings in the provenance report, never hard failures.
REFERENCE_CLASS_COUNTS: dict[ClassLabel, int] = {
    ClassLabel.COVID19: 341,
    ClassLabel.NORMAL: 2800,
    ClassLabel.VIRAL: 1493,
    ClassLabel.BACTERIAL: 2772,
}


@dataclass(frozen=True)
class ImageRecord:
    """One X-ray image with provenance.

    ``path`` is relative to its source root (posix separators) so manifests
    are portable; ``root`` is the in-memory resolution base and is not
    serialized.  ``width``/``height``/``channels`` are populated at ingest
    time and may be absent on records reloaded from a manifest file.
    """

    id: str
    source: SourceKind
    label: ClassLabel
    path: str
    digest: str
    width: int | None = None
    height: int | None = None
    channels: int | None = None
    root: Path | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.label not in SOURCE_LABELS[self.source]:
            raise ValueError(
                f"label {self.label.value!r} is not valid for source {self.source.value!r}"
            )
        if self.channels not in (None, 1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")

    @property
    def full_path(self) -> Path:
        if self.root is None:
            raise ValueError(
                f"record {self.id} has no source root attached; "
                "reload the manifest with source roots to open images"
            )
        return self.root / Path(PurePosixPath(self.path))

    def with_root(self, root: Path | None) -> "ImageRecord":
        return replace(self, root=root)


def make_record_id(source: SourceKind, relative_path: str) -> str:
    return f"{source.value}/{relative_path}"


@dataclass(frozen=True)
class Manifest:
    """Ordered collection of all ingested records, sorted by id."""

    records: tuple[ImageRecord, ...]

    @staticmethod
    def from_records(records: Iterable[ImageRecord]) -> "Manifest":
        ordered = tuple(sorted(records, key=lambda r: r.id))
        seen: set[str] = set()
        for record in ordered:
            if record.id in seen:
                raise ValueError(f"duplicate record id in manifest: {record.id}")
            seen.add(record.id)
        return Manifest(records=ordered)

    @property
    def checksum(self) -> str:
        digest = hashlib.sha256()
        for record in self.records:
            digest.update(record.id.encode("utf-8"))
            digest.update(b"\n")
        return digest.hexdigest()

    def class_counts(self) -> dict[ClassLabel, int]:
        counts = {label: 0 for label in ClassLabel}
        for record in self.records:
            counts[record.label] += 1
        return counts

    def with_label(self, label: ClassLabel) -> list[ImageRecord]:
        return [r for r in self.records if r.label == label]

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class DatasetSpec:
    """One of the three binary tasks; the positive class is always COVID-19."""

    name: str
    negative_label: ClassLabel
    expected_negative_count: int
    positive_label: ClassLabel = ClassLabel.COVID19
    expected_positive_count: int = 341


DATASET_SPECS: dict[str, DatasetSpec] = {
    "dataset1": DatasetSpec("dataset1", ClassLabel.NORMAL, 2800),
    "dataset2": DatasetSpec("dataset2", ClassLabel.VIRAL, 1493),
    "dataset3": DatasetSpec("dataset3", ClassLabel.BACTERIAL, 2772),
}


class MissingClassError(ValueError):
    pass


@dataclass(frozen=True)
class BinaryDataset:
    """All records of a task's two classes, binary-labeled, ordered by id."""

    name: str
    records: tuple[ImageRecord, ...]
    labels: tuple[int, ...]  # 1 = covid19 (positive), 0 = negative class
    spec: DatasetSpec
    count_warnings: tuple[str, ...] = ()

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    @property
    def positive_count(self) -> int:
        return sum(self.labels)

    @property
    def negative_count(self) -> int:
        return len(self.labels) - self.positive_count

    def label_of(self, record_id: str) -> int:
        try:
            return self._label_index[record_id]
        except AttributeError:
            index = {r.id: lab for r, lab in zip(self.records, self.labels)}
            object.__setattr__(self, "_label_index", index)
            return index[record_id]

    def subset(self, ids: Iterable[str]) -> "BinaryDataset":
        wanted = set(ids)
        unknown = wanted - {r.id for r in self.records}
        if unknown:
            raise KeyError(f"ids not in dataset {self.name}: {sorted(unknown)[:3]}")
        pairs = [(r, lab) for r, lab in zip(self.records, self.labels) if r.id in wanted]
        return BinaryDataset(
            name=self.name,
            records=tuple(r for r, _ in pairs),
            labels=tuple(lab for _, lab in pairs),
            spec=self.spec,
            count_warnings=self.count_warnings,
        )

    def __len__(self) -> int:
        return len(self.records)


def build_dataset(manifest: Manifest, spec: DatasetSpec) -> BinaryDataset:
    """Materialize one binary task from the manifest.

    Pure function of (manifest, spec): the output ordering is the manifest's
    lexicographic id ordering restricted to the two classes.  Count drift
    against the reference snapshot is a warning, not an error; a class with
    zero records is fatal.
    """
    pairs: list[tuple[ImageRecord, int]] = []
    for record in manifest.records:
        if record.label == spec.positive_label:
            pairs.append((record, 1))
        elif record.label == spec.negative_label:
            pairs.append((record, 0))
    positives = sum(lab for _, lab in pairs)
    negatives = len(pairs) - positives
    for class_label, count in (
        (spec.positive_label, positives),
        (spec.negative_label, negatives),
    ):
        if count == 0:
            raise MissingClassError(
                f"missing class: manifest has no {class_label.value!r} records "
                f"required by {spec.name}"
            )
    warnings = []
    if positives != spec.expected_positive_count:
        warnings.append(
            f"{spec.name}: {positives} {spec.positive_label.value} records, "
            f"reference snapshot has {spec.expected_positive_count}"
        )
    if negatives != spec.expected_negative_count:
        warnings.append(
            f"{spec.name}: {negatives} {spec.negative_label.value} records, "
            f"reference snapshot has {spec.expected_negative_count}"
        )
    return BinaryDataset(
        name=spec.name,
        records=tuple(r for r, _ in pairs),
        labels=tuple(lab for _, lab in pairs),
        spec=spec,
        count_warnings=tuple(warnings),
    )


def save_manifest(
    manifest: Manifest,
    path: str | Path,
    extra_header: Mapping[str, str] | None = None,
) -> None:
    """Write the line-delimited manifest: id, source, label, path, digest.

    ``extra_header`` adds provenance lines; all ``#`` lines are skipped on load.
    """
    path = Path(path)
    lines = [f"# checksum={manifest.checksum}"]
    for key, value in (extra_header or {}).items():
        lines.append(f"# {key}={value}")
    lines.extend(
        f"{r.id}\t{r.source.value}\t{r.label.value}\t{r.path}\t{r.digest}"
        for r in manifest.records
    )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_manifest(
    path: str | Path, roots: Mapping[SourceKind, Path] | None = None
) -> Manifest:
    """Reload a manifest file; ``roots`` re-attaches image locations."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"manifest file not found: {path}")
    records: list[ImageRecord] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ValueError(f"malformed manifest line: {line!r}")
        record_id, source_value, label_value, rel_path, digest = fields
        source = SourceKind(source_value)
        root = roots.get(source) if roots else None
        records.append(
            ImageRecord(
                id=record_id,
                source=source,
                label=ClassLabel(label_value),
                path=rel_path,
                digest=digest,
                root=Path(root) if root is not None else None,
            )
        )
    return Manifest.from_records(records)


def provenance_report(
    manifest: Manifest, skip_counts: Mapping[SourceKind, int] | None = None
) -> str:
    """Plain-text count summary per class per source vs the reference snapshot."""
    counts = manifest.class_counts()
    per_source: dict[SourceKind, int] = {kind: 0 for kind in SourceKind}
    for record in manifest.records:
        per_source[record.source] += 1
    lines = ["provenance report", f"records: {len(manifest)}", f"checksum: {manifest.checksum}", ""]
    lines.append("class counts vs reference snapshot:")
    for label in ClassLabel:
        expected = REFERENCE_CLASS_COUNTS[label]
        actual = counts[label]
        marker = "ok" if actual == expected else f"DRIFT (reference {expected})"
        lines.append(f"  {label.value:<10} {actual:>6}  {marker}")
    lines.append("")
    lines.append("records per source:")
    for kind in SourceKind:
        skipped = f", skipped {skip_counts[kind]}" if skip_counts and kind in skip_counts else ""
        lines.append(f"  {kind.value:<17} {per_source[kind]:>6}{skipped}")
    lines.append("")
    lines.append("dataset membership vs reference snapshot:")
    for spec in DATASET_SPECS.values():
        positives = counts[spec.positive_label]
        negatives = counts[spec.negative_label]
        expected = spec.expected_positive_count + spec.expected_negative_count
        total = positives + negatives
        marker = "ok" if total == expected else f"DRIFT (reference {expected})"
        lines.append(
            f"  {spec.name}: {total} records "
            f"({positives} {spec.positive_label.value} + {negatives} {spec.negative_label.value})  {marker}"
        )
    return "\n".join(lines) + "\n"
