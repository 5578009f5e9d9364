"""Synthetic corpus generators used by smoke runs and demos."""

from __future__ import annotations

import numpy as np
import pytest

from cxrbench.folds import assign_folds
from cxrbench.synthetic import synthetic_arrays, write_synthetic_sources


class TestSyntheticArrays:
    def test_shapes_and_balance(self):
        data = synthetic_arrays(n_per_class=10, side=24, seed=3)
        assert data.images.shape == (20, 24, 24, 3)
        assert data.images.dtype == np.float32
        assert sum(data.labels) == 10
        assert len(data.ids) == len(set(data.ids)) == 20

    def test_ids_name_the_class(self):
        data = synthetic_arrays(n_per_class=5, seed=0)
        for rid, label in zip(data.ids, data.labels):
            assert ("/pos-" if label else "/neg-") in rid

    def test_seed_determinism(self):
        a = synthetic_arrays(seed=5)
        b = synthetic_arrays(seed=5)
        np.testing.assert_array_equal(a.images, b.images)
        assert a.ids == b.ids
        c = synthetic_arrays(seed=6)
        assert not np.array_equal(a.images, c.images)

    def test_classes_are_linearly_separable_by_mean(self):
        data = synthetic_arrays(n_per_class=20, seed=1)
        means = data.images.mean(axis=(1, 2, 3))
        positives = means[np.array(data.labels) == 1]
        negatives = means[np.array(data.labels) == 0]
        assert positives.min() > negatives.max()

    def test_pixels_stay_in_unit_range(self):
        data = synthetic_arrays(n_per_class=30, seed=2)
        assert data.images.min() >= 0.0
        assert data.images.max() <= 1.0

    def test_source_covers_all_ids(self):
        data = synthetic_arrays(n_per_class=5, seed=0)
        source = data.source()
        assert list(source.ids) == list(data.ids)
        assert len(source) == 10

    def test_fold_sources_partition(self):
        data = synthetic_arrays(n_per_class=10, seed=4)
        assignment = assign_folds(data, seed=4)
        train, test = data.fold_sources(assignment, fold=1)
        assert set(train.ids) | set(test.ids) == set(data.ids)
        assert not set(train.ids) & set(test.ids)


class TestSourceTrees:
    def test_deterministic_bytes(self, tmp_path):
        a = write_synthetic_sources(tmp_path / "a", seed=1)
        b = write_synthetic_sources(tmp_path / "b", seed=1)
        for kind in a:
            files_a = sorted(p for p in a[kind].rglob("*") if p.is_file())
            files_b = sorted(p for p in b[kind].rglob("*") if p.is_file())
            assert [p.name for p in files_a] == [p.name for p in files_b]
            for pa, pb in zip(files_a, files_b):
                assert pa.read_bytes() == pb.read_bytes(), pa.name

    def test_counts_configurable(self, tmp_path):
        paths = write_synthetic_sources(tmp_path, covid=3, normal=2, viral=2, bacterial=2)
        from cxrbench.ingest import build_manifest, ingest_source
        from cxrbench.records import ClassLabel

        manifest = build_manifest(
            [ingest_source(path, kind) for kind, path in paths.items()]
        )
        counts = manifest.class_counts()
        assert counts[ClassLabel.COVID19] == 3
        assert counts[ClassLabel.NORMAL] == 2
