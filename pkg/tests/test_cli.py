"""Command-line workflow on the synthetic corpus.

These tests drive main() in-process so monkeypatching and coverage work;
exit codes follow the documented contract: 0 success, 1 discrepancy or
run failure, 2 usage, 3 missing input.
"""

from __future__ import annotations

import json
from importlib import resources

import pytest

from cxrbench import cli


def run_cli(*args):
    return cli.main([str(a) for a in args])


def fast_run_args(out, epochs=2):
    return (
        "run", "--synthetic", "--out", out,
        "--backbones", "tiny_cnn",
        "--epochs", epochs,
        "--learning-rate", "1e-3",
        "--folds", "1",
    )


class TestExitCodes:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("--version")
        assert exc.value.code == 0
        assert "cxrbench" in capsys.readouterr().out

    def test_no_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli()
        assert exc.value.code == 2

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            run_cli("ingest", "--frobnicate")
        assert exc.value.code == 2

    def test_unknown_dataset_is_usage_error(self, tmp_path, capsys):
        code = run_cli(
            "run", "--synthetic", "--out", tmp_path, "--datasets", "dataset9"
        )
        assert code == 2
        assert "dataset9" in capsys.readouterr().err

    def test_report_without_runs_is_missing_input(self, tmp_path, capsys):
        code = run_cli("report", "--out", tmp_path)
        assert code == 3
        assert "no run records" in capsys.readouterr().err

    def test_ingest_without_sources_is_missing_input(self, tmp_path, capsys):
        code = run_cli(
            "ingest", "--out", tmp_path, "--covid-repo-dir", tmp_path / "nope"
        )
        assert code == 3


class TestIngestAndSplit:
    def test_synthetic_ingest_writes_manifest_and_provenance(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli("ingest", "--synthetic", "--out", out) == 0
        stdout = capsys.readouterr().out
        assert (out / "manifest.tsv").exists()
        assert (out / "provenance.txt").exists()
        assert "records" in stdout
        text = (out / "manifest.tsv").read_text()
        assert text.startswith("# checksum=")
        assert "# seed-echo=" in text

    def test_split_writes_fold_files_per_dataset(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli("ingest", "--synthetic", "--out", out) == 0
        assert run_cli("split", "--synthetic", "--out", out) == 0
        folds = sorted(p.name for p in (out / "folds").iterdir())
        assert folds == ["dataset1.tsv", "dataset2.tsv", "dataset3.tsv"]
        body = (out / "folds" / "dataset1.tsv").read_text()
        assert "# generator=fisher-yates/splitmix64/v1" in body

    def test_build_datasets_writes_listings(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli("ingest", "--synthetic", "--out", out) == 0
        assert run_cli("build-datasets", "--synthetic", "--out", out) == 0
        listings = sorted(p.name for p in (out / "datasets").iterdir())
        assert listings == ["dataset1.tsv", "dataset2.tsv", "dataset3.tsv"]

    def test_end_to_end_determinism(self, tmp_path):
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            assert run_cli("ingest", "--synthetic", "--out", out, "--seed", 7) == 0
            assert run_cli("split", "--synthetic", "--out", out, "--seed", 7) == 0
        a, b = outs
        assert (a / "manifest.tsv").read_bytes() == (b / "manifest.tsv").read_bytes()
        for name in ("dataset1", "dataset2", "dataset3"):
            assert (a / "folds" / f"{name}.tsv").read_bytes() == (
                b / "folds" / f"{name}.tsv"
            ).read_bytes()

    def test_seed_changes_fold_assignments(self, tmp_path):
        outs = {7: tmp_path / "a", 8: tmp_path / "b"}
        for seed, out in outs.items():
            assert run_cli("ingest", "--synthetic", "--out", out, "--seed", seed) == 0
            assert run_cli("split", "--synthetic", "--out", out, "--seed", seed) == 0
        a = (outs[7] / "folds" / "dataset1.tsv").read_text()
        b = (outs[8] / "folds" / "dataset1.tsv").read_text()
        assert a != b


class TestRun:
    def test_synthetic_run_trains_and_saves_records(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli(*fast_run_args(out)) == 0
        stdout = capsys.readouterr().out
        runs = list((out / "runs").glob("*.run"))
        assert len(runs) == 3  # one fold, three datasets
        assert "learning_rate=0.001 (reference 1e-05)" in stdout
        payload = json.loads(runs[0].read_text())
        assert payload["backbone"] == "tiny_cnn"
        assert payload["seed"] == 2020

    def test_rerun_skips_existing_records(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert run_cli(*fast_run_args(out)) == 0
        capsys.readouterr()
        assert run_cli(*fast_run_args(out)) == 0
        assert "3 resumed" in capsys.readouterr().out

    def test_failed_build_reports_and_exits_one(self, tmp_path, capsys, monkeypatch):
        def broken(config):
            raise RuntimeError("weights store offline")

        monkeypatch.setattr(cli, "build_model", broken)
        out = tmp_path / "out"
        code = run_cli(*fast_run_args(out))
        assert code == 1
        err = capsys.readouterr().err
        assert "weights store offline" in err

    def test_checkpoints_saved(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli(*fast_run_args(out)) == 0
        checkpoints = list((out / "checkpoints").glob("*.npz"))
        assert len(checkpoints) == 3


@pytest.fixture(scope="module")
def trained_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    assert run_cli(*fast_run_args(out)) == 0
    return out


class TestReportAndValidate:

    def test_run_writes_metric_tables(self, trained_out):
        tables = trained_out / "tables"
        names = sorted(p.name for p in tables.glob("metrics_*.txt"))
        assert names == [
            "metrics_dataset1.txt", "metrics_dataset2.txt", "metrics_dataset3.txt",
        ]
        text = (tables / "metrics_dataset1.txt").read_text()
        assert "tiny_cnn" in text
        assert "# seed=2020" in text

    def test_report_writes_curves_plots_and_comparison(self, trained_out, capsys):
        assert run_cli("report", "--out", trained_out) == 0
        report_dir = trained_out / "report"
        curves = list(report_dir.glob("*.tsv"))
        plots = list(report_dir.glob("*.png"))
        assert len(curves) == 9  # 3 datasets x 1 fold x 3 series
        assert len(plots) == 9
        comparison = (report_dir / "comparison.txt").read_text()
        assert "this run" in comparison
        assert "reference benchmark" in comparison
        stdout = capsys.readouterr().out
        assert "report artifact:" in stdout

    def test_validate_passes_on_bundled_fixture(self, tmp_path, capsys):
        assert run_cli("validate", "--out", tmp_path) == 0
        stdout = capsys.readouterr().out
        assert "reference rows checked: 90" in stdout
        assert "discrepancies: 0" in stdout

    def test_validate_detects_corruption(self, tmp_path, capsys):
        import cxrbench

        bundled = (
            resources.files(cxrbench)
            .joinpath("_data/reference_results.tsv")
            .read_text()
        )
        lines = bundled.splitlines()
        header, first = lines[0], lines[1].split("\t")
        first[7] = f"{float(first[7]) + 5.0:.1f}"  # push acc past tolerance
        bad = tmp_path / "bad.tsv"
        bad.write_text("\n".join([header, "\t".join(first)] + lines[2:]) + "\n")
        code = run_cli("validate", "--out", tmp_path, "--fixtures", bad)
        assert code == 1
        assert "discrepan" in capsys.readouterr().out.lower()

    def test_validate_missing_fixture_is_exit_three(self, tmp_path):
        code = run_cli("validate", "--out", tmp_path, "--fixtures", tmp_path / "gone.tsv")
        assert code == 3


class TestConfigFile:
    def test_yaml_settings_honored_and_flags_win(self, tmp_path, capsys):
        config = tmp_path / "settings.yaml"
        out_a = tmp_path / "from-yaml"
        config.write_text(
            f"out: {out_a}\nsynthetic: true\nseed: 11\n"
        )
        assert run_cli("ingest", "--config", config) == 0
        assert (out_a / "manifest.tsv").exists()

        out_b = tmp_path / "from-flag"
        assert run_cli("ingest", "--config", config, "--out", out_b) == 0
        assert (out_b / "manifest.tsv").exists()

    def test_unknown_config_key_is_usage_error(self, tmp_path, capsys):
        config = tmp_path / "settings.yaml"
        config.write_text("verbosity: extreme\n")
        assert run_cli("ingest", "--config", config, "--out", tmp_path) == 2
        assert "verbosity" in capsys.readouterr().err

    def test_missing_config_file_is_missing_input(self, tmp_path):
        code = run_cli("ingest", "--config", tmp_path / "absent.yaml", "--out", tmp_path)
        assert code == 3
