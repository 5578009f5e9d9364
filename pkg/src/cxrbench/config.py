"""Run settings: one flat key-value file, mirrored one-to-one by CLI flags.

Precedence is flag > config file > built-in default.  The resolved
settings are hashed into a short digest that every artifact embeds, so
outputs are traceable to the exact configuration that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .models import BACKBONES, PRETRAINED_BACKBONES
from .records import DATASET_SPECS, SourceKind
from .training import DEFAULT_SEED

__all__ = ["SettingsError", "Settings", "load_settings", "config_digest"]


class SettingsError(ValueError):
    """Bad configuration (unknown key, invalid value); a usage error."""


@dataclass(frozen=True)
class Settings:
    """Everything the CLI can be told, with reference defaults."""

    seed: int = DEFAULT_SEED
    out: str = "artifacts"
    covid_repo_dir: str | None = None
    chestxray8_dir: str | None = None
    kaggle_pneumonia_dir: str | None = None
    manifest: str | None = None
    datasets: tuple[str, ...] = tuple(DATASET_SPECS)
    backbones: tuple[str, ...] | None = None
    folds: tuple[int, ...] = (1, 2, 3, 4, 5)
    learning_rate: float = 1e-5
    batch_size: int = 3
    epochs: int = 30
    pretrained: bool = True
    device: str = "auto"
    synthetic: bool = False
    fixtures: str | None = None

    def __post_init__(self) -> None:
        unknown = [d for d in self.datasets if d not in DATASET_SPECS]
        if unknown:
            raise SettingsError(
                f"unknown datasets {unknown}; choose from {', '.join(DATASET_SPECS)}"
            )
        if self.backbones is not None:
            bad = [b for b in self.backbones if b not in BACKBONES]
            if bad:
                raise SettingsError(
                    f"unknown backbones {bad}; choose from {', '.join(BACKBONES)}"
                )
        bad_folds = [k for k in self.folds if not 1 <= k <= 5]
        if bad_folds:
            raise SettingsError(f"folds must be in 1..5, got {bad_folds}")
        if not self.datasets:
            raise SettingsError("at least one dataset is required")
        if not self.folds:
            raise SettingsError("at least one fold is required")

    # -- resolution -------------------------------------------------------

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def manifest_path(self) -> Path:
        return Path(self.manifest) if self.manifest else self.out_dir / "manifest.tsv"

    @property
    def synthetic_sources_dir(self) -> Path:
        return self.out_dir / "synthetic_sources"

    @property
    def runs_dir(self) -> Path:
        return self.out_dir / "runs"

    @property
    def checkpoints_dir(self) -> Path:
        return self.out_dir / "checkpoints"

    @property
    def tables_dir(self) -> Path:
        return self.out_dir / "tables"

    @property
    def report_dir(self) -> Path:
        return self.out_dir / "report"

    def folds_path(self, dataset: str) -> Path:
        return self.out_dir / "folds" / f"{dataset}.tsv"

    def dataset_listing_path(self, dataset: str) -> Path:
        return self.out_dir / "datasets" / f"{dataset}.tsv"

    def resolved_backbones(self) -> tuple[str, ...]:
        """Default model set: the small CNN for synthetic runs, the five
        pretrained backbones otherwise."""
        if self.backbones is not None:
            return self.backbones
        return ("tiny_cnn",) if self.synthetic else PRETRAINED_BACKBONES

    def source_dirs(self) -> dict[SourceKind, str | None]:
        return {
            SourceKind.COVID_REPO: self.covid_repo_dir,
            SourceKind.CHESTXRAY8: self.chestxray8_dir,
            SourceKind.KAGGLE_PNEUMONIA: self.kaggle_pneumonia_dir,
        }


_LIST_FIELDS = {"datasets", "backbones"}
_INT_LIST_FIELDS = {"folds"}


def _coerce(name: str, value):
    if value is None:
        return None
    if name in _LIST_FIELDS:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(str(v) for v in value)
    if name in _INT_LIST_FIELDS:
        if isinstance(value, str):
            value = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(int(v) for v in value)
    return value


def load_settings(
    config_path: str | Path | None = None,
    overrides: Mapping[str, object] | None = None,
) -> Settings:
    """Settings from an optional YAML file plus non-None overrides."""
    known = {f.name for f in dataclasses.fields(Settings)}
    values: dict[str, object] = {}
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"config file not found: {config_path}")
        loaded = yaml.safe_load(config_path.read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise SettingsError(f"config file {config_path} must hold a key-value mapping")
        unknown = sorted(set(loaded) - known)
        if unknown:
            raise SettingsError(
                f"unknown config keys {unknown}; valid keys: {', '.join(sorted(known))}"
            )
        values.update(loaded)
    for key, value in (overrides or {}).items():
        if value is not None:
            if key not in known:
                raise SettingsError(f"unknown setting {key!r}")
            values[key] = value
    coerced = {name: _coerce(name, value) for name, value in values.items()}
    try:
        return Settings(**coerced)
    except TypeError as exc:
        raise SettingsError(str(exc)) from exc


# Keys that define the experiment.  Artifact locations (out, manifest,
# source directories) and the device selector are deliberately excluded:
# the same experiment written to two places must produce byte-identical
# files, digest included.
_DIGEST_KEYS = (
    "seed",
    "datasets",
    "folds",
    "learning_rate",
    "batch_size",
    "epochs",
    "pretrained",
    "synthetic",
)


def config_digest(settings: Settings) -> str:
    """Short stable digest of the experiment-defining settings."""
    payload = {key: getattr(settings, key) for key in _DIGEST_KEYS}
    payload["backbones"] = settings.resolved_backbones()
    canonical = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]
