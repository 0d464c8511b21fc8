import os

import pytest

from survbench.harness import SplitPlan, compare_models, run_experiment
from survbench.reporting import (
    read_results_csv,
    render_accuracy_table,
    render_prevalence_table,
    report,
    write_results_csv,
)
from test_harness import const_spec, label_corpus, memo_spec


@pytest.fixture(scope="module")
def small_result():
    corpus = label_corpus(80, seed=1)
    plan = SplitPlan(seeds=[1, 2, 3])
    return run_experiment(corpus, [memo_spec("memo"),
                                   const_spec("always_pos")], plan)


class TestTables:
    def test_accuracy_table_column_order(self, small_result):
        comparison = compare_models(small_result, "accuracy")
        text = render_accuracy_table(small_result, comparison)
        header = text.splitlines()[0].split()
        assert header == [
            "Model", "Sens", "Spec", "PPV", "NPV", "F1", "Acc",
            "Acc", "p", "(adj)",
        ]
        assert "*" in text  # referent cell

    def test_prevalence_table_column_order(self, small_result):
        comparison = compare_models(small_result, "diff_pos")
        text = render_prevalence_table(small_result, comparison)
        header = text.splitlines()[0].split()
        assert header == [
            "Model", "FP", "FN", "n", "pos", "Diff", "pos", "p",
            "Pair.", "p",
        ]
        assert "*" in text

    def test_empty_result_header_only(self):
        from survbench.harness import ExperimentResult

        empty = ExperimentResult(model_names=[], seeds=[], cells={})
        assert len(render_accuracy_table(empty).splitlines()) == 1
        assert len(render_prevalence_table(empty).splitlines()) == 1


class TestReportFiles:
    def test_report_writes_everything(self, small_result, tmp_path):
        paths = report(small_result, tmp_path)
        names = {os.path.basename(p) for p in paths}
        assert {
            "results.csv", "summary.csv", "comparison.csv",
            "table_accuracy.txt", "table_prevalence.txt",
            "accuracy_by_model.png", "diff_pos_by_model.png",
        } <= names
        for p in paths:
            assert os.path.getsize(p) > 0

    def test_results_csv_roundtrip(self, small_result, tmp_path):
        path = tmp_path / "results.csv"
        write_results_csv(small_result, path)
        back = read_results_csv(path)
        assert back.model_names == small_result.succeeded()
        assert back.seeds == small_result.seeds
        for key, cell in back.cells.items():
            orig = small_result.cells[key]
            assert cell.confusion == orig.confusion
            assert cell.metrics.acc == orig.metrics.acc
            assert cell.metrics.diff_pos == orig.metrics.diff_pos

    def test_report_byte_reproducible(self, small_result, tmp_path):
        dir_a = tmp_path / "a"
        dir_b = tmp_path / "b"
        report(small_result, dir_a)
        report(small_result, dir_b)
        for name in sorted(os.listdir(dir_a)):
            with open(dir_a / name, "rb") as fa, open(dir_b / name,
                                                      "rb") as fb:
                assert fa.read() == fb.read(), name

    def test_failed_model_in_summary(self, tmp_path):
        from survbench.harness import ModelSpec

        class Exploding:
            def fit(self, X, y, X_val=None, y_val=None):
                raise RuntimeError("nope")

        corpus = label_corpus(40, seed=2)
        bad = ModelSpec(
            name="bad", model_type="dummy", ngrams=1, weighting="count",
            build=lambda seed: Exploding(),
        )
        result = run_experiment(
            corpus, [memo_spec("ok"), bad], SplitPlan(seeds=[1, 2])
        )
        report(result, tmp_path)
        summary = (tmp_path / "summary.csv").read_text()
        assert "failed: " in summary
        assert "ok" in summary
