from contextlib import redirect_stderr, redirect_stdout
from io import StringIO
from pathlib import Path
from unittest import TestCase
import json
import math
import tempfile

import pandas as pd

from src.cli import EXIT_ERROR, EXIT_NO_LDA, EXIT_OK, main


class CliTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def run_cli(self, *argv, output="out"):
        stdout, stderr = StringIO(), StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = main(["--jobs", "1", "--output", str(self.dir / output), *argv])
        self.stdout = stdout.getvalue()
        return code

    def manifest(self, output="out"):
        return json.loads((self.dir / output / "manifest.json").read_text())


class TestPolygonCommands(CliTestCase):
    def test_polygon_from_tally(self):
        assert self.run_cli("polygon", "--tally", "15,20,5,10") == EXIT_OK
        summary = json.loads((self.dir / "out" / "summary.json").read_text())
        assert math.isclose(summary["u_star"], 0.952381, abs_tol=1e-6)
        assert json.loads(self.stdout)["swap"] == "d"
        assert self.manifest()["outputs"] == ["polygon.csv", "summary.json"]

    def test_polygon_plot(self):
        assert self.run_cli("--plot", "polygon", "--tally", "15,20,5,10") == EXIT_OK
        assert (self.dir / "out" / "polygon.svg").exists()

    def test_polygon_needs_a_population(self):
        assert self.run_cli("polygon") == EXIT_ERROR

    def test_polygon_from_dataset(self):
        path = self.dir / "population.csv"
        path.write_text("x,group,label\n1,1,1\n2,1,0\n3,2,1\n4,2,0\n5,2,0\n")
        assert self.run_cli("polygon", "--dataset", str(path)) == EXIT_OK
        assert str(path) in self.manifest()["input_digests"]

    def test_polygon_relabels_when_group_2_has_the_higher_base_rate(self):
        assert self.run_cli("polygon", "--tally", "5,10,15,20") == EXIT_OK
        assert len(pd.read_csv(self.dir / "out" / "polygon.csv")) > 0
        summary = json.loads((self.dir / "out" / "summary.json").read_text())
        assert summary["relabeled"] is True
        assert math.isclose(summary["u_star"], 20 / 21, abs_tol=1e-12)

    def test_polygon_from_german_file(self):
        path = self.dir / "german.csv"
        path.write_text(
            "credit_history_category,credit_amount,unemployment_category,"
            "installment_rate_percentage_income,present_residence_duration,gender,creditworthiness\n"
            "A30,1200,A71,4,2,M,1\n"
            "A32,5000,A73,2,4,M,2\n"
            "A34,800,A75,3,1,F,1\n"
            "A32,2300,A72,1,3,F,2\n"
            "A33,900,A74,2,2,F,2\n"
        )
        code = self.run_cli("polygon", "--dataset", str(path), "--schema", "german")
        assert code == EXIT_OK
        summary = json.loads(self.stdout)
        assert summary["relabeled"] is False
        assert math.isclose(summary["delta_star"], 1 / 2 - 1 / 3)

    def test_grid(self):
        assert self.run_cli("grid", "--tally", "15,20,5,10") == EXIT_OK
        assert json.loads(self.stdout) == {"points": 22176}
        assert len(pd.read_csv(self.dir / "out" / "grid.csv")) == 22176

    def test_grid_cap(self):
        assert self.run_cli("grid", "--tally", "15,20,5,10", "--cap", "100") == EXIT_ERROR

    def test_threshold_with_target_utility(self):
        assert self.run_cli("threshold", "--tally", "15,20,5,10", "--u0", "1.0") == EXIT_OK
        result = json.loads((self.dir / "out" / "threshold.json").read_text())
        assert math.isclose(result["min_disparity"], 2 / 21)


class TestInstanceCommands(CliTestCase):
    def test_reduce_then_solve(self):
        assert self.run_cli("reduce", "--weights", "1,-1,3", output="reduced") == EXIT_OK
        instance = self.dir / "reduced" / "reduction.csv"
        assert instance.exists()

        assert self.run_cli("solve", str(instance), output="solved") == EXIT_OK
        solution = json.loads((self.dir / "solved" / "solution.json").read_text())
        assert solution["status"] == "found"
        assert solution["selection"] == ["x1", "x2"]
        assert math.isclose(solution["utility"], 2 / 15)
        assert set(self.manifest("solved")["input_digests"]) == {
            str(instance),
            str(instance.with_suffix(".json")),
        }

    def test_no_lda_exits_2(self):
        self.run_cli("reduce", "--weights", "1,2", output="reduced")
        instance = str(self.dir / "reduced" / "reduction.csv")
        assert self.run_cli("solve", instance, output="solved") == EXIT_NO_LDA
        assert self.run_cli("approx", instance, "--epsilon", "0.5", output="approx") == EXIT_NO_LDA

    def test_approx_epsilon_must_be_positive(self):
        self.run_cli("reduce", "--weights", "1,-1,3", output="reduced")
        instance = str(self.dir / "reduced" / "reduction.csv")
        assert self.run_cli("approx", instance, "--epsilon", "0", output="approx") == EXIT_ERROR

    def test_missing_instance(self):
        assert self.run_cli("solve", str(self.dir / "nowhere.csv")) == EXIT_ERROR

    def test_gen_writes_instances(self):
        code = self.run_cli(
            "gen", "--instance-count", "3", "--n-options", "4", "--max-digits", "1-2"
        )
        assert code == EXIT_OK
        written = sorted(path.name for path in (self.dir / "out" / "instances").iterdir())
        assert written == [
            "i0000.csv",
            "i0000.json",
            "i0001.csv",
            "i0001.json",
            "i0002.csv",
            "i0002.json",
        ]

    def test_bench(self):
        code = self.run_cli(
            "--plot",
            "bench",
            "--instance-count",
            "2",
            "--n-options",
            "4",
            "--max-digits",
            "1,2",
            "--epsilons",
            "0.5",
        )
        assert code == EXIT_OK
        report = pd.read_csv(self.dir / "out" / "report.csv")
        assert list(report.columns) == [
            "instance_id",
            "n_options",
            "max_digits",
            "input_digits",
            "algorithm",
            "epsilon",
            "wall_ms",
            "status",
            "valid",
            "lda_exists",
        ]
        assert len(report) == 4
        assert "bench.svg" in self.manifest()["outputs"]

    def test_bench_manifest_lists_only_this_run(self):
        args = ("bench", "--n-options", "4", "--max-digits", "1", "--epsilons", "0.5")
        assert self.run_cli(*args, "--instance-count", "3") == EXIT_OK
        assert self.run_cli(*args, "--instance-count", "1") == EXIT_OK
        assert self.manifest()["outputs"] == [
            "instances/i0000.csv",
            "instances/i0000.json",
            "report.csv",
            "summary.json",
        ]

    def test_bad_integer_list(self):
        assert self.run_cli("gen", "--max-digits", "1-x") == EXIT_ERROR


class TestSearchCommand(CliTestCase):
    def test_synthetic_search(self):
        config = self.dir / "search.json"
        config.write_text(json.dumps({"synthetic": {"n_rows": 300}, "summary_n": 4}))
        code = self.run_cli(
            "search",
            "--synthetic",
            "--config",
            str(config),
            "--trainer",
            "decision_tree",
            "--count",
            "4",
            "--n-values",
            "2-4",
            "--reps",
            "20",
        )
        assert code == EXIT_OK
        assert len(pd.read_csv(self.dir / "out" / "pool.csv")) == 4 * 3
        assert pd.read_csv(self.dir / "out" / "statistics.csv")["n"].tolist() == [2, 3, 4]
        summary = json.loads((self.dir / "out" / "summary.json").read_text())
        assert summary["model"] == "decision_tree"
        assert summary["n"] == 4
        assert str(config) in self.manifest()["input_digests"]
        assert len(pd.read_csv(self.dir / "out" / "eval_polygon.csv")) >= 3
        frontier = json.loads((self.dir / "out" / "eval_frontier.json").read_text())
        assert frontier["u_star"] <= 1.0

    def test_pool_smaller_than_every_trial_size(self):
        config = self.dir / "search.json"
        config.write_text(json.dumps({"synthetic": {"n_rows": 300}}))
        code = self.run_cli(
            "--plot",
            "search",
            "--synthetic",
            "--config",
            str(config),
            "--trainer",
            "decision_tree",
            "--count",
            "1",
            "--reps",
            "5",
        )
        assert code == EXIT_OK
        assert pd.read_csv(self.dir / "out" / "statistics.csv")["n"].tolist() == [1]
        summary = json.loads(self.stdout)
        assert summary["n"] == 1
        assert summary["disparity"] == 0.0
        assert summary["freq_min_disp"] == 1.0
        assert {"eval_polygon.svg", "sweep.svg"} <= set(self.manifest()["outputs"])

    def test_random_seed_search_needs_a_forest(self):
        code = self.run_cli(
            "search", "--synthetic", "--trainer", "logistic_regression", "--search-type", "random_seed"
        )
        assert code == EXIT_ERROR


class TestMiscCommands(CliTestCase):
    def test_pathological_demo(self):
        assert self.run_cli("demo-pathological") == EXIT_OK
        result = json.loads(self.stdout)
        assert result["pre_accuracy"] == 1.0
        assert result["post_disparity"] == 0.0
        assert (self.dir / "out" / "transcript.json").exists()

    def test_pathological_demo_needs_both_files(self):
        path = self.dir / "pre.csv"
        path.write_text("x,group,label\n1,1,1\n2,2,0\n")
        assert self.run_cli("demo-pathological", "--pre", str(path)) == EXIT_ERROR

    def test_sources(self):
        assert self.run_cli("sources", "german") == EXIT_OK
        assert "statlog" in self.stdout

    def test_unknown_command(self):
        assert self.run_cli("frobnicate") == EXIT_ERROR
