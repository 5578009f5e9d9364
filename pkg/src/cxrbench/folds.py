"""Deterministic stratified 5-fold assignment.

Fold membership must be archival: the same dataset ordering and seed must
give the same assignment on any platform, forever.  The shuffle is therefore
pinned to an explicitly specified generator rather than a platform default:
a SplitMix64 stream drives a Fisher-Yates shuffle, with bounded draws taken
by rejection sampling.  The generator name is written into every fold file
so a reader can tell exactly which algorithm produced it.

Within each class, records are shuffled and dealt into consecutive blocks
whose sizes follow the remainder rule: with n records and k folds, fold i
receives floor(n/k) records plus one extra iff i > k - (n mod k).  Extra
records therefore land in the highest-numbered folds, which reproduces the
per-fold class counts of the reference tables (341 -> 68,68,68,68,69;
1493 -> 298,298,299,299,299; 2772 -> 554,554,554,555,555; 2800 -> 560 x 5).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

__all__ = [
    "GENERATOR_NAME",
    "NUM_FOLDS",
    "SplitMix64",
    "fisher_yates",
    "fold_sizes",
    "FoldAssignment",
    "assign_folds",
    "fold_split",
    "save_fold_file",
    "load_fold_file",
]

GENERATOR_NAME = "fisher-yates/splitmix64/v1"
NUM_FOLDS = 5

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


class SplitMix64:
    """SplitMix64 pseudorandom stream (Steele, Lea & Flood 2014).

    Fully specified by this implementation: state advances by the golden
    gamma and each output is the finalized state.  Bounded draws use
    rejection sampling on the raw 64-bit output so the mapping from stream
    to integers is itself pinned.
    """

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection on the top of the range."""
        if n <= 0:
            raise ValueError("randbelow requires n >= 1")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            draw = self.next_u64()
            if draw < limit:
                return draw % n


def _fnv1a64(text: str) -> int:
    digest = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        digest = ((digest ^ byte) * _FNV_PRIME) & _MASK64
    return digest


def _class_stream(seed: int, class_name: str) -> SplitMix64:
    # Distinct per-class streams; mixing once decorrelates nearby seeds.
    mixer = SplitMix64((seed & _MASK64) ^ _fnv1a64(class_name))
    return SplitMix64(mixer.next_u64())


def fisher_yates(items: Sequence, rng: SplitMix64) -> list:
    """Return a shuffled copy using the classic descending Fisher-Yates."""
    shuffled = list(items)
    for i in range(len(shuffled) - 1, 0, -1):
        j = rng.randbelow(i + 1)
        shuffled[i], shuffled[j] = shuffled[j], shuffled[i]
    return shuffled


def fold_sizes(n: int, k: int = NUM_FOLDS) -> list[int]:
    """Per-fold sizes under the remainder rule; extras go to the last folds."""
    if k <= 0:
        raise ValueError(f"need k >= 1 folds, got {k}")
    if n < 0:
        raise ValueError(f"record count cannot be negative, got {n}")
    base, remainder = divmod(n, k)
    return [base + (1 if i > k - remainder else 0) for i in range(1, k + 1)]


class LabeledCollection(Protocol):
    """What the splitter needs from a dataset: ordered ids and binary labels."""

    @property
    def name(self) -> str: ...

    @property
    def ids(self) -> Sequence[str]: ...

    @property
    def labels(self) -> Sequence[int]: ...


@dataclass(frozen=True)
class FoldAssignment:
    """Mapping of every record id to exactly one fold in 1..5."""

    dataset_name: str
    seed: int
    fold_of: dict[str, int]
    generator: str = GENERATOR_NAME

    def fold_ids(self, k: int) -> list[str]:
        _check_fold_index(k)
        return sorted(rid for rid, fold in self.fold_of.items() if fold == k)

    def counts(self) -> dict[int, int]:
        out = {k: 0 for k in range(1, NUM_FOLDS + 1)}
        for fold in self.fold_of.values():
            out[fold] += 1
        return out


def _check_fold_index(k: int) -> None:
    if not isinstance(k, int) or not 1 <= k <= NUM_FOLDS:
        raise ValueError(f"fold index must be in 1..{NUM_FOLDS}, got {k!r}")


def assign_folds(dataset: LabeledCollection, seed: int) -> FoldAssignment:
    """Stratified assignment of every record to one of 5 folds.

    Each class is shuffled independently by a seeded pinned permutation and
    dealt into consecutive blocks sized by the remainder rule.  The result is
    a pure function of the dataset's id ordering and the seed.
    """
    ids = list(dataset.ids)
    labels = list(dataset.labels)
    if not ids:
        raise ValueError("cannot assign folds for an empty dataset")
    if len(ids) != len(labels):
        raise ValueError("ids and labels must align")
    fold_of: dict[str, int] = {}
    for class_value in sorted(set(labels)):
        class_ids = [rid for rid, lab in zip(ids, labels) if lab == class_value]
        shuffled = fisher_yates(class_ids, _class_stream(seed, f"class={class_value}"))
        sizes = fold_sizes(len(class_ids))
        cursor = 0
        for fold_index, size in enumerate(sizes, start=1):
            for rid in shuffled[cursor : cursor + size]:
                fold_of[rid] = fold_index
            cursor += size
    if len(fold_of) != len(ids):
        raise ValueError("duplicate record ids in dataset")
    return FoldAssignment(dataset_name=dataset.name, seed=seed, fold_of=fold_of)


def fold_split(assignment: FoldAssignment, k: int) -> tuple[list[str], list[str]]:
    """Train/test id lists for fold k: test = fold k, train = all others.

    Both lists come back in lexicographic id order, the same determinism
    anchor the dataset itself uses.
    """
    _check_fold_index(k)
    train: list[str] = []
    test: list[str] = []
    for rid in sorted(assignment.fold_of):
        (test if assignment.fold_of[rid] == k else train).append(rid)
    return train, test


def save_fold_file(
    assignment: FoldAssignment,
    path: str | Path,
    extra_header: Mapping[str, str] | None = None,
) -> None:
    """Write the line-delimited fold file; loadable with load_fold_file.

    ``extra_header`` adds provenance lines (config digest, tool version);
    unknown header keys are ignored on load.
    """
    path = Path(path)
    lines = [
        f"# dataset={assignment.dataset_name}",
        f"# seed={assignment.seed}",
        f"# generator={assignment.generator}",
    ]
    for key, value in (extra_header or {}).items():
        lines.append(f"# {key}={value}")
    lines.extend(f"{rid}\t{assignment.fold_of[rid]}" for rid in sorted(assignment.fold_of))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_fold_file(path: str | Path) -> FoldAssignment:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"fold file not found: {path}")
    header: dict[str, str] = {}
    fold_of: dict[str, int] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
            continue
        rid, _, fold = line.partition("\t")
        fold_of[rid] = int(fold)
    for required in ("dataset", "seed", "generator"):
        if required not in header:
            raise ValueError(f"fold file {path} missing header field '{required}'")
    return FoldAssignment(
        dataset_name=header["dataset"],
        seed=int(header["seed"]),
        fold_of=fold_of,
        generator=header["generator"],
    )
