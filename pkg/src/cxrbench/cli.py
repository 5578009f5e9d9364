"""Command-line surface: ingest, build-datasets, split, run, report, validate.

Exit codes: 0 success, 1 validation or run discrepancy, 2 usage error,
3 missing input.  Flags mirror config-file keys one-to-one; a flag given
on the command line overrides the config file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .config import Settings, SettingsError, config_digest, load_settings
from .folds import FoldAssignment, assign_folds, load_fold_file, save_fold_file
from .ingest import IngestError, IngestResult, build_manifest, ingest_source
from .models import ModelConfig, build_model
from .records import (
    DATASET_SPECS,
    BinaryDataset,
    Manifest,
    SourceKind,
    build_dataset,
    load_manifest,
    provenance_report,
    save_manifest,
)
from .reference import (
    load_reference_rows,
    render_discrepancy_report,
    validate_reference_rows,
)
from .reporting import (
    ArtifactMeta,
    write_comparison_table,
    write_curve_files,
    write_metric_tables,
    write_overlay_plots,
)
from .synthetic import write_synthetic_sources
from .training import (
    TrainConfig,
    load_run_record,
    plan_runs,
    run_matrix,
    fold_sources,
)

EXIT_OK = 0
EXIT_DISCREPANCY = 1
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3


class MissingInputError(Exception):
    """A required input file or directory does not exist."""


def _meta(settings: Settings) -> ArtifactMeta:
    return ArtifactMeta(
        seed=settings.seed, config_digest=config_digest(settings), version=__version__
    )


def _source_roots(settings: Settings) -> dict[SourceKind, Path]:
    """Locate the three source trees, generating synthetic ones if asked."""
    if settings.synthetic:
        base = settings.synthetic_sources_dir
        expected = {
            SourceKind.COVID_REPO: base / "covid_repo",
            SourceKind.CHESTXRAY8: base / "chestxray8",
            SourceKind.KAGGLE_PNEUMONIA: base / "kaggle_pneumonia",
        }
        if not all(path.is_dir() for path in expected.values()):
            return write_synthetic_sources(base, seed=settings.seed)
        return expected
    roots: dict[SourceKind, Path] = {}
    for kind, configured in settings.source_dirs().items():
        if configured is None:
            raise MissingInputError(
                f"no directory configured for source {kind.value!r} "
                f"(set {kind.value}_dir, or use synthetic data)"
            )
        root = Path(configured)
        if not root.is_dir():
            raise MissingInputError(f"source directory not found: {root}")
        roots[kind] = root
    return roots


def _ingest_all(settings: Settings) -> tuple[Manifest, list[IngestResult]]:
    roots = _source_roots(settings)
    results = [ingest_source(roots[kind], kind) for kind in SourceKind]
    return build_manifest(results), results


def _load_manifest_checked(settings: Settings) -> Manifest:
    path = settings.manifest_path
    if not path.exists():
        raise MissingInputError(
            f"manifest not found: {path} (run the ingest command first)"
        )
    roots: dict[SourceKind, Path] | None
    try:
        roots = _source_roots(settings)
    except MissingInputError:
        roots = None  # ids and labels still work; image loading will not
    return load_manifest(path, roots)


def _build_datasets(settings: Settings, manifest: Manifest) -> dict[str, BinaryDataset]:
    return {
        name: build_dataset(manifest, DATASET_SPECS[name]) for name in settings.datasets
    }


def _load_or_create_assignments(
    settings: Settings, datasets: dict[str, BinaryDataset]
) -> dict[str, FoldAssignment]:
    assignments = {}
    meta = _meta(settings)
    for name, dataset in datasets.items():
        path = settings.folds_path(name)
        if path.exists():
            assignments[name] = load_fold_file(path)
        else:
            assignment = assign_folds(dataset, settings.seed)
            path.parent.mkdir(parents=True, exist_ok=True)
            save_fold_file(assignment, path, extra_header=meta.as_mapping())
            assignments[name] = assignment
    return assignments


# -- commands -----------------------------------------------------------------

def cmd_ingest(settings: Settings) -> int:
    manifest, results = _ingest_all(settings)
    settings.out_dir.mkdir(parents=True, exist_ok=True)
    meta = _meta(settings)
    save_manifest(manifest, settings.manifest_path, extra_header=meta.as_mapping())
    skip_counts = {result.source: result.skip_count for result in results}
    report = provenance_report(manifest, skip_counts)
    report_path = settings.out_dir / "provenance.txt"
    report_path.write_text(
        "\n".join(meta.header_lines()) + "\n\n" + report, encoding="utf-8"
    )
    print(f"manifest: {settings.manifest_path} ({len(manifest)} records)")
    for result in results:
        print(
            f"  {result.source.value}: {len(result.records)} ingested, "
            f"{result.skip_count} skipped"
        )
        for skip in result.skipped:
            print(f"    skipped {skip.path}: {skip.reason}")
    print(f"provenance report: {report_path}")
    return EXIT_OK


def cmd_build_datasets(settings: Settings) -> int:
    manifest = _load_manifest_checked(settings)
    meta = _meta(settings)
    datasets = _build_datasets(settings, manifest)
    for name, dataset in datasets.items():
        path = settings.dataset_listing_path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = meta.header_lines()
        lines += [f"{r.id}\t{label}" for r, label in zip(dataset.records, dataset.labels)]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(
            f"{name}: {len(dataset)} records "
            f"({dataset.positive_count} positive, {dataset.negative_count} negative) -> {path}"
        )
        for warning in dataset.count_warnings:
            print(f"  warning: {warning}")
    return EXIT_OK


def cmd_split(settings: Settings) -> int:
    manifest = _load_manifest_checked(settings)
    datasets = _build_datasets(settings, manifest)
    for name, dataset in datasets.items():
        path = settings.folds_path(name)
        if path.exists():
            path.unlink()  # regenerate: split is the authoritative producer
    assignments = _load_or_create_assignments(settings, datasets)
    for name, assignment in assignments.items():
        counts = assignment.counts()
        profile = ", ".join(str(counts[k]) for k in sorted(counts))
        print(f"{name}: fold sizes {profile} -> {settings.folds_path(name)}")
    return EXIT_OK


def cmd_run(settings: Settings) -> int:
    if not settings.manifest_path.exists():
        if settings.synthetic:
            cmd_ingest(settings)
        else:
            raise MissingInputError(
                f"manifest not found: {settings.manifest_path} (run ingest first, "
                "or use synthetic data)"
            )
    manifest = _load_manifest_checked(settings)
    datasets = _build_datasets(settings, manifest)
    assignments = _load_or_create_assignments(settings, datasets)
    backbones = settings.resolved_backbones()

    if any(backbone != "tiny_cnn" for backbone in backbones):
        from .models.backbones import configure_device

        device = configure_device(settings.device if settings.device != "auto" else None)
        print(f"device: {device}")

    def model_factory(task):
        pretrained = settings.pretrained and task.backbone != "tiny_cnn"
        return build_model(
            ModelConfig(backbone=task.backbone, pretrained=pretrained, seed=settings.seed)
        )

    def sources_factory(task, model):
        return fold_sources(
            datasets[task.dataset],
            assignments[task.dataset],
            task.fold,
            model.input_side,
            model.normalization,
        )

    config = TrainConfig(
        learning_rate=settings.learning_rate,
        batch_size=settings.batch_size,
        epochs=settings.epochs,
        seed=settings.seed,
    )
    for deviation in config.overrides():
        print(f"config override: {deviation}")
    tasks = plan_runs(backbones, list(datasets), settings.folds)
    result = run_matrix(
        tasks,
        model_factory,
        sources_factory,
        config,
        out_dir=settings.runs_dir,
        checkpoint_dir=settings.checkpoints_dir,
        progress=print,
    )
    meta = _meta(settings)
    for path in write_metric_tables(result.records, settings.tables_dir, meta):
        print(f"metric table: {path}")
    print(
        f"runs: {result.trained} trained, {result.skipped} resumed, "
        f"{len(result.failures)} failed"
    )
    for name, error in result.failures:
        print(f"  FAILED {name}: {error}", file=sys.stderr)
    return EXIT_DISCREPANCY if result.failures else EXIT_OK


def cmd_report(settings: Settings) -> int:
    run_files = sorted(settings.runs_dir.glob("*.run"))
    if not run_files:
        raise MissingInputError(
            f"no run records under {settings.runs_dir} (run the run command first)"
        )
    records = [load_run_record(path) for path in run_files]
    meta = _meta(settings)
    written = write_curve_files(records, settings.report_dir, meta)
    written += write_overlay_plots(records, settings.report_dir, meta)
    written.append(write_comparison_table(records, settings.report_dir, meta))
    for path in written:
        print(f"report artifact: {path}")
    return EXIT_OK


def cmd_validate(settings: Settings) -> int:
    try:
        rows = load_reference_rows(settings.fixtures)
    except FileNotFoundError as exc:
        raise MissingInputError(str(exc)) from exc
    except ValueError as exc:
        print(f"fixture file is corrupt: {exc}", file=sys.stderr)
        return EXIT_DISCREPANCY
    discrepancies = validate_reference_rows(rows)
    print(render_discrepancy_report(rows, discrepancies))
    return EXIT_DISCREPANCY if discrepancies else EXIT_OK


_COMMANDS = {
    "ingest": cmd_ingest,
    "build-datasets": cmd_build_datasets,
    "split": cmd_split,
    "run": cmd_run,
    "report": cmd_report,
    "validate": cmd_validate,
}


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML settings file")
    parser.add_argument("--seed", type=int, help="global random seed")
    parser.add_argument("--out", help="output directory for all artifacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cxrbench",
        description="COVID-19 chest X-ray classification benchmark harness",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="walk the image sources into a manifest")
    _add_common_flags(p)
    p.add_argument("--covid-repo-dir", dest="covid_repo_dir")
    p.add_argument("--chestxray8-dir", dest="chestxray8_dir")
    p.add_argument("--kaggle-pneumonia-dir", dest="kaggle_pneumonia_dir")
    p.add_argument("--manifest", help="manifest output path")
    p.add_argument(
        "--synthetic", action=argparse.BooleanOptionalAction, default=None,
        help="generate and ingest bundled synthetic sources",
    )

    p = sub.add_parser("build-datasets", help="materialize the binary datasets")
    _add_common_flags(p)
    p.add_argument("--manifest")
    p.add_argument("--datasets", help="comma-separated dataset names")
    p.add_argument("--synthetic", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("split", help="write stratified 5-fold assignments")
    _add_common_flags(p)
    p.add_argument("--manifest")
    p.add_argument("--datasets")
    p.add_argument("--synthetic", action=argparse.BooleanOptionalAction, default=None)

    p = sub.add_parser("run", help="train the (backbone, dataset, fold) matrix")
    _add_common_flags(p)
    p.add_argument("--manifest")
    p.add_argument("--datasets")
    p.add_argument("--backbones", help="comma-separated model names")
    p.add_argument("--folds", help="comma-separated fold numbers (1..5)")
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--pretrained", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--device", help="cpu, gpu, or auto")
    p.add_argument("--synthetic", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--covid-repo-dir", dest="covid_repo_dir")
    p.add_argument("--chestxray8-dir", dest="chestxray8_dir")
    p.add_argument("--kaggle-pneumonia-dir", dest="kaggle_pneumonia_dir")

    p = sub.add_parser("report", help="render curve plots and the comparison table")
    _add_common_flags(p)

    p = sub.add_parser("validate", help="recompute the bundled reference tables")
    _add_common_flags(p)
    p.add_argument("--fixtures", help="alternative fixture file to validate")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "config")
    }
    try:
        settings = load_settings(args.config, overrides)
    except SettingsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    try:
        return _COMMANDS[args.command](settings)
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except SettingsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
