"""End-to-end tests for the command-line interface."""
import csv
import json
import os

import numpy as np
import pytest

from funcause import load_dataset
from funcause.cli import ESTIMATOR_NAMES, main, run_estimator
from funcause import ScenarioConfig, Scenario, generate


def run(argv):
    return main(argv)


class TestSimulate:
    def test_writes_dataset_and_truth(self, tmp_path, capsys):
        data = tmp_path / "data.csv"
        truth = tmp_path / "truth.json"
        code = run(
            [
                "simulate",
                "--n",
                "20",
                "--t",
                "16",
                "--output",
                str(data),
                "--truth",
                str(truth),
            ]
        )
        assert code == 0
        ds = load_dataset(data)
        assert len(ds) == 20
        payload = json.loads(truth.read_text())
        assert payload["schema_version"] == 1
        assert len(payload["beta_x"]) == 16

    def test_deterministic_given_seed(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (p1, p2):
            assert run(["simulate", "--n", "10", "--t", "8", "--seed", "5", "--output", str(p)]) == 0
        assert p1.read_text() == p2.read_text()


class TestEstimate:
    @pytest.fixture()
    def dataset_path(self, tmp_path):
        p = tmp_path / "data.csv"
        assert run(["simulate", "--n", "30", "--t", "12", "--output", str(p)]) == 0
        return p

    @pytest.mark.parametrize("estimator", ["ipw", "dr", "frechet-euclid", "kernel"])
    def test_runs_each_estimator(self, dataset_path, tmp_path, estimator):
        out = tmp_path / "result.json"
        code = run(
            ["estimate", str(dataset_path), "--estimator", estimator, "--output", str(out)]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["estimator"] == estimator
        assert len(payload["delta"]) == 12
        assert payload["phi_date"] >= 0

    def test_ci_attached(self, dataset_path, tmp_path):
        out = tmp_path / "result.json"
        code = run(
            [
                "estimate",
                str(dataset_path),
                "--estimator",
                "ipw",
                "--ci",
                "--output",
                str(out),
            ]
        )
        assert code == 0
        ci = json.loads(out.read_text())["ci"]
        assert ci["lower"] <= ci["upper"]
        assert ci["regime"] in ("nonzero_norm", "zero_norm")

    def test_missing_dataset_exits_one(self, tmp_path):
        code = run(
            ["estimate", str(tmp_path / "nope.csv"), "--estimator", "ipw"]
        )
        assert code == 1

    def test_bad_estimator_exits_two(self, dataset_path):
        with pytest.raises(SystemExit) as err:
            run(["estimate", str(dataset_path), "--estimator", "bogus"])
        assert err.value.code == 2

    def test_missing_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as err:
            run([])
        assert err.value.code == 2


class TestRegister:
    def test_idempotent_on_second_run(self, tmp_path):
        data = tmp_path / "data.csv"
        assert (
            run(
                [
                    "simulate",
                    "--n",
                    "12",
                    "--t",
                    "24",
                    "--noise",
                    "0.0",
                    "--confounding",
                    "0.0",
                    "--amplitude",
                    "0.0",
                    "--output",
                    str(data),
                ]
            )
            == 0
        )
        once = tmp_path / "reg1.csv"
        twice = tmp_path / "reg2.csv"
        assert run(["register", str(data), "--target", "outcomes", "--output", str(once)]) == 0
        assert run(["register", str(once), "--target", "outcomes", "--output", str(twice)]) == 0
        y1 = load_dataset(once).outcome_matrix
        y2 = load_dataset(twice).outcome_matrix
        assert np.max(np.abs(y1 - y2)) <= 1e-6

    def test_covariates_requires_covariate_curves(self, tmp_path):
        data = tmp_path / "data.csv"
        assert run(["simulate", "--n", "10", "--t", "12", "--output", str(data)]) == 0
        out = tmp_path / "reg.csv"
        code = run(["register", str(data), "--target", "covariates", "--output", str(out)])
        assert code == 1


class TestBenchmark:
    def test_report_files_and_row_counts(self, tmp_path):
        outdir = tmp_path / "report"
        code = run(
            [
                "benchmark",
                "--estimators",
                "ipw,frechet-euclid",
                "--sizes",
                "20,30",
                "--replicates",
                "3",
                "--t",
                "10",
                "--output",
                str(outdir),
            ]
        )
        assert code == 0
        for name in (
            "summary.csv",
            "boxplot_data.csv",
            "per_t_error.csv",
            "per_t_error.svg",
            "mae_boxplot.svg",
            "metadata.json",
        ):
            assert (outdir / name).exists()
        with open(outdir / "summary.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4  # 2 estimators x 2 sizes
        with open(outdir / "boxplot_data.csv") as fh:
            raw = list(csv.DictReader(fh))
        assert len(raw) == 12  # 2 estimators x 2 sizes x 3 replicates
        meta = json.loads((outdir / "metadata.json").read_text())
        assert meta["schema_version"] == 1
        assert "git_hash" in meta

    def test_deterministic_across_thread_counts(self, tmp_path):
        outputs = []
        for threads, sub in (("1", "a"), ("4", "b")):
            outdir = tmp_path / sub
            os.environ["FUNCAUSE_THREADS"] = threads
            try:
                code = run(
                    [
                        "benchmark",
                        "--estimators",
                        "ipw",
                        "--sizes",
                        "20",
                        "--replicates",
                        "4",
                        "--t",
                        "8",
                        "--output",
                        str(outdir),
                    ]
                )
            finally:
                del os.environ["FUNCAUSE_THREADS"]
            assert code == 0
            with open(outdir / "boxplot_data.csv") as fh:
                outputs.append(fh.read())
        assert outputs[0] == outputs[1]

    def test_config_file_overrides_flags(self, tmp_path):
        ini = tmp_path / "bench.ini"
        outdir = tmp_path / "out"
        ini.write_text(
            "[benchmark]\n"
            "estimators = ipw\n"
            "sizes = 16\n"
            "replicates = 2\n"
            f"output = {outdir}\n"
        )
        code = run(
            [
                "benchmark",
                "--estimators",
                "kernel",
                "--sizes",
                "99",
                "--t",
                "8",
                "--config",
                str(ini),
            ]
        )
        assert code == 0
        with open(outdir / "summary.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["estimator"] == "ipw"
        assert rows[0]["n"] == "16"

    def test_unknown_estimator_exits_one(self, tmp_path):
        code = run(
            [
                "benchmark",
                "--estimators",
                "bogus",
                "--sizes",
                "16",
                "--output",
                str(tmp_path / "x"),
            ]
        )
        assert code == 1


class TestRunEstimator:
    def test_all_estimators_run_on_binary_data(self):
        ds, _ = generate(ScenarioConfig(n=24, t=16))
        for name in ESTIMATOR_NAMES:
            eff = run_estimator(ds, name)
            assert eff.delta.values.shape == (16,)

    def test_kernel_estimators_run_on_continuous_data(self):
        ds, _ = generate(
            ScenarioConfig(n=24, t=16, scenario=Scenario.CONTINUOUS_FUNCTIONAL)
        )
        for name in ("kernel", "operator-kernel", "iterative-srvf"):
            eff = run_estimator(ds, name)
            assert eff.delta.values.shape == (16,)

    def test_unknown_name_rejected(self):
        ds, _ = generate(ScenarioConfig(n=10, t=8))
        with pytest.raises(ValueError):
            run_estimator(ds, "bogus")
