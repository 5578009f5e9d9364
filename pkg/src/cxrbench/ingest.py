"""Ingestion of the three public image sources into ImageRecords.

Each source has its own labeling convention:

* covid_repo: a GitHub-style collection with a ``metadata.csv`` describing
  finding and modality per file.  Only X-ray rows whose finding includes
  COVID-19 are kept; CT rows are excluded.  Without a metadata file every
  readable image is taken as a COVID-19 X-ray.
* chestxray8: every readable image is a normal (healthy) X-ray.
* kaggle_pneumonia: labels are inferred from filenames, which embed
  "bacteria" or "virus"; anything else is skipped with a reason.

Unreadable files and duplicate payloads (same content digest within a
source) are skipped, never fatal.  A missing source directory or a source
with zero usable images is fatal.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, UnidentifiedImageError

from .records import SOURCE_LABELS, ClassLabel, ImageRecord, Manifest, SourceKind, make_record_id

__all__ = [
    "IngestError",
    "SkippedFile",
    "IngestResult",
    "ingest_source",
    "build_manifest",
]

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff"}

# Modality values (lowercased) accepted from covid_repo metadata.
_XRAY_MODALITIES = {"x-ray", "xray"}


class IngestError(Exception):
    """Fatal ingestion failure (missing directory, empty source)."""


@dataclass(frozen=True)
class SkippedFile:
    path: str
    reason: str


@dataclass(frozen=True)
class IngestResult:
    source: SourceKind
    records: tuple[ImageRecord, ...]
    skipped: tuple[SkippedFile, ...]

    @property
    def skip_count(self) -> int:
        return len(self.skipped)


def _relative_posix(path: Path, root: Path) -> str:
    return path.relative_to(root).as_posix()


def _iter_candidate_files(root: Path) -> list[Path]:
    files = [p for p in root.rglob("*") if p.is_file()]
    files.sort(key=lambda p: p.relative_to(root).as_posix())
    return files


def _probe_image(path: Path) -> tuple[int, int, int]:
    """Return (width, height, channels) or raise on unreadable data."""
    with Image.open(path) as img:
        img.load()
        width, height = img.size
        channels = 3 if img.mode in ("RGB", "RGBA", "P", "CMYK", "YCbCr") else 1
    return width, height, channels


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_covid_metadata(root: Path) -> dict[str, tuple[str, str]] | None:
    """Map filename -> (finding, modality) from metadata.csv, if present."""
    for candidate in (root / "metadata.csv", root / "metadata" / "metadata.csv"):
        if candidate.exists():
            break
    else:
        return None
    table: dict[str, tuple[str, str]] = {}
    with candidate.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            return table
        columns = {name.strip().lower(): name for name in reader.fieldnames}
        filename_col = columns.get("filename")
        finding_col = columns.get("finding")
        modality_col = columns.get("modality")
        if filename_col is None:
            raise IngestError(f"metadata file {candidate} has no 'filename' column")
        for row in reader:
            filename = (row.get(filename_col) or "").strip()
            if not filename:
                continue
            finding = (row.get(finding_col) or "").strip() if finding_col else ""
            modality = (row.get(modality_col) or "").strip() if modality_col else ""
            table[filename] = (finding, modality)
    return table


def _covid_label(
    rel_path: str, metadata: dict[str, tuple[str, str]] | None
) -> tuple[ClassLabel | None, str | None]:
    if metadata is None:
        return ClassLabel.COVID19, None
    filename = rel_path.rsplit("/", 1)[-1]
    if filename not in metadata:
        return None, "no metadata row"
    finding, modality = metadata[filename]
    if modality and modality.lower() not in _XRAY_MODALITIES:
        return None, f"excluded modality {modality!r}"
    if "covid-19" not in finding.lower():
        return None, f"finding {finding!r} is not COVID-19"
    return ClassLabel.COVID19, None


def _kaggle_label(rel_path: str) -> tuple[ClassLabel | None, str | None]:
    filename = rel_path.rsplit("/", 1)[-1].lower()
    if "bacteria" in filename:
        return ClassLabel.BACTERIAL, None
    if "virus" in filename:
        return ClassLabel.VIRAL, None
    return None, "filename names neither bacteria nor virus"


def ingest_source(root: str | Path, source: SourceKind) -> IngestResult:
    """Walk one source directory and classify every file found.

    Deterministic: files are visited in sorted relative-path order and the
    first copy of a duplicated payload wins.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"source directory not found: {root}")
    metadata = _load_covid_metadata(root) if source is SourceKind.COVID_REPO else None

    records: list[ImageRecord] = []
    skipped: list[SkippedFile] = []
    seen_digests: set[str] = set()
    for path in _iter_candidate_files(root):
        rel_path = _relative_posix(path, root)
        if source is SourceKind.COVID_REPO and path.name == "metadata.csv":
            continue
        if "\t" in rel_path or "\n" in rel_path:
            skipped.append(SkippedFile(rel_path, "path contains tab or newline"))
            continue
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            skipped.append(SkippedFile(rel_path, f"not a recognized image suffix ({path.suffix or 'none'})"))
            continue

        if source is SourceKind.COVID_REPO:
            label, reason = _covid_label(rel_path, metadata)
        elif source is SourceKind.KAGGLE_PNEUMONIA:
            label, reason = _kaggle_label(rel_path)
        else:
            label, reason = ClassLabel.NORMAL, None
        if label is None:
            skipped.append(SkippedFile(rel_path, reason or "unlabelable"))
            continue
        assert label in SOURCE_LABELS[source]

        try:
            width, height, channels = _probe_image(path)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            skipped.append(SkippedFile(rel_path, f"unreadable image: {exc}"))
            continue
        digest = _file_digest(path)
        if digest in seen_digests:
            skipped.append(SkippedFile(rel_path, "duplicate of an earlier file (same digest)"))
            continue
        seen_digests.add(digest)
        records.append(
            ImageRecord(
                id=make_record_id(source, rel_path),
                source=source,
                label=label,
                path=rel_path,
                digest=digest,
                width=width,
                height=height,
                channels=channels,
                root=root,
            )
        )

    if not records:
        raise IngestError(f"source {source.value} at {root} has no usable images")
    return IngestResult(source=source, records=tuple(records), skipped=tuple(skipped))


def build_manifest(results: list[IngestResult]) -> Manifest:
    """Merge per-source ingest results into one ordered manifest."""
    all_records: list[ImageRecord] = []
    for result in results:
        all_records.extend(result.records)
    return Manifest.from_records(all_records)
