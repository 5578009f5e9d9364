"""Settings loading, overrides, and the experiment digest."""

from __future__ import annotations

import pytest

from cxrbench.config import Settings, SettingsError, config_digest, load_settings


class TestLoadSettings:
    def test_defaults(self):
        settings = load_settings()
        assert settings.seed == 2020
        assert settings.datasets == ("dataset1", "dataset2", "dataset3")
        assert settings.folds == (1, 2, 3, 4, 5)
        assert settings.pretrained is True
        assert settings.synthetic is False

    def test_yaml_values_applied(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("seed: 9\ndatasets: [dataset2]\nepochs: 3\n")
        settings = load_settings(path)
        assert settings.seed == 9
        assert settings.datasets == ("dataset2",)
        assert settings.epochs == 3

    def test_override_beats_yaml(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("seed: 9\n")
        settings = load_settings(path, {"seed": 123})
        assert settings.seed == 123

    def test_none_override_keeps_yaml_value(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("seed: 9\n")
        settings = load_settings(path, {"seed": None})
        assert settings.seed == 9

    def test_comma_lists_coerced(self):
        settings = load_settings(None, {"datasets": "dataset1,dataset3", "folds": "2,4"})
        assert settings.datasets == ("dataset1", "dataset3")
        assert settings.folds == (2, 4)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "s.yaml"
        path.write_text("turbo: true\n")
        with pytest.raises(SettingsError, match="turbo"):
            load_settings(path)

    def test_missing_file_raises_file_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_settings(tmp_path / "absent.yaml")

    def test_invalid_fold_rejected(self):
        with pytest.raises(SettingsError, match="fold"):
            load_settings(None, {"folds": "6"})


class TestResolvedBackbones:
    def test_default_is_all_pretrained(self):
        from cxrbench.models import PRETRAINED_BACKBONES

        settings = load_settings()
        assert settings.resolved_backbones() == PRETRAINED_BACKBONES
        assert len(PRETRAINED_BACKBONES) == 5

    def test_synthetic_defaults_to_tiny_cnn(self):
        settings = load_settings(None, {"synthetic": True})
        assert settings.resolved_backbones() == ("tiny_cnn",)

    def test_explicit_list_wins(self):
        settings = load_settings(
            None, {"synthetic": True, "backbones": "resnet50,tiny_cnn"}
        )
        assert settings.resolved_backbones() == ("resnet50", "tiny_cnn")

    def test_unknown_backbone_rejected(self):
        with pytest.raises(SettingsError, match="vgg16"):
            load_settings(None, {"backbones": "vgg16"})


class TestConfigDigest:
    def test_ignores_artifact_locations(self, tmp_path):
        a = load_settings(None, {"out": str(tmp_path / "a")})
        b = load_settings(None, {"out": str(tmp_path / "b")})
        assert config_digest(a) == config_digest(b)

    def test_ignores_device(self):
        a = load_settings(None, {"device": "cpu"})
        b = load_settings(None, {"device": None})
        assert config_digest(a) == config_digest(b)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"seed": 1},
            {"datasets": "dataset1"},
            {"folds": "1,2"},
            {"learning_rate": 1e-3},
            {"batch_size": 4},
            {"epochs": 2},
            {"pretrained": False},
            {"synthetic": True},
            {"backbones": "resnet50"},
        ],
    )
    def test_each_experiment_knob_changes_digest(self, overrides):
        assert config_digest(load_settings(None, overrides)) != config_digest(
            load_settings()
        )

    def test_digest_is_short_hex(self):
        digest = config_digest(load_settings())
        assert len(digest) == 12
        int(digest, 16)
