import numpy as np
import pytest

from oracles import threshold_grid_accuracies
from survbench.models import RandomForest
from survbench.textprep import DocTermMatrix, select_features
from survbench.tuning import (
    SearchSpace,
    bayes_opt,
    feature_eliminate,
    grid_search,
    threshold_sweep,
    write_tuning_log,
)


class TestGridSearch:
    def test_one_dimensional(self):
        result = grid_search(
            lambda p: abs(p["x"] - 2), SearchSpace({"x": [1, 2, 3]})
        )
        assert result.best_params == {"x": 2}
        assert result.best_error == 0

    def test_tie_keeps_first(self):
        result = grid_search(
            lambda p: 0.5, SearchSpace({"x": [3, 1, 2]})
        )
        assert result.best_params == {"x": 3}

    def test_evaluation_count_is_product(self):
        space = SearchSpace(
            {"n_topics": [5, 10, 15, 20, 30],
             "c": [0.001, 0.01, 0.1, 1, 2, 8, 16]}
        )
        result = grid_search(lambda p: p["c"], space)
        assert len(result.log) == 35  # full 5 x 7 product

    def test_lexicographic_order(self):
        space = SearchSpace({"a": [1, 2], "b": [10, 20]})
        result = grid_search(lambda p: 1.0, space)
        seen = [(entry[0]["a"], entry[0]["b"]) for entry in result.log]
        assert seen == [(1, 10), (1, 20), (2, 10), (2, 20)]

    def test_failure_records_inf(self):
        def objective(p):
            if p["x"] == 2:
                raise RuntimeError("boom")
            return p["x"]

        result = grid_search(objective, SearchSpace({"x": [2, 1, 3]}))
        assert result.best_params == {"x": 1}
        assert result.log[0][1] == np.inf

    def test_best_error_is_log_minimum(self):
        rng = np.random.default_rng(0)
        errors = {v: float(rng.random()) for v in range(8)}
        result = grid_search(
            lambda p: errors[p["x"]], SearchSpace({"x": list(range(8))})
        )
        assert result.best_error == min(e for _, e in result.log)

    def test_rejects_continuous(self):
        with pytest.raises(ValueError):
            grid_search(
                lambda p: 0.0,
                SearchSpace({"x": ("continuous", 0.0, 1.0)}),
            )


class TestThresholdSweep:
    def test_perfect_scores_tiebreak_half(self):
        assert threshold_sweep([0.0, 1.0, 1.0], [0, 1, 1]) == 0.5

    def test_wide_optimum_tiebreak_half(self):
        assert threshold_sweep([0.2, 0.8], [0, 1]) == 0.5

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            scores = np.round(rng.random(10), 2)
            labels = rng.integers(0, 2, 10)
            got = threshold_sweep(scores, labels)
            cutoffs, accs = threshold_grid_accuracies(scores, labels)
            best_acc = accs.max()
            got_acc = accs[np.isclose(cutoffs, got)][0]
            assert got_acc == best_acc
            optimal = cutoffs[accs == best_acc]
            # tie-break: nothing optimal is closer to 0.5, and nothing
            # equally close is smaller
            dist = np.abs(optimal - 0.5)
            assert abs(got - 0.5) == dist.min()
            assert got == optimal[dist == dist.min()].min()

    def test_rejects_out_of_range_scores(self):
        with pytest.raises(ValueError):
            threshold_sweep([1.5], [1])


def elimination_fixture(n_docs=120, n_features=20, seed=2):
    """Labels depend on features 0-4 only."""
    rng = np.random.default_rng(seed)
    X = rng.random((n_docs, n_features))
    y = (X[:, :5].sum(axis=1) > 2.5).astype(int)
    rows, cols = np.nonzero(X)
    M = DocTermMatrix(n_docs, n_features, rows, cols, X[rows, cols],
                      "count")
    return M, y


def rf_trainer(seed=0, n_trees=30):
    def train(X, y):
        return RandomForest(n_trees=n_trees, seed=seed,
                            threshold=0.5).fit(X, y)

    return train


class TestFeatureEliminate:
    def test_informative_features_survive_nonrecursive(self):
        M, y = elimination_fixture()
        X_train = select_features(M, np.arange(20))
        n_top, kept = feature_eliminate(
            rf_trainer(), X_train, y[:], X_train, y, mode="nonrecursive",
            select_features=select_features, start=20,
            candidates=[5, 10, 15],
        )
        informative = {0, 1, 2, 3, 4}
        ten_best = feature_eliminate(
            rf_trainer(), X_train, y, X_train, y, mode="nonrecursive",
            select_features=select_features, start=20, candidates=[10],
        )[1]
        assert informative <= set(ten_best.tolist())

    def test_subset_of_initial_trim(self):
        M, y = elimination_fixture()
        initial = rf_trainer()(M, y)
        ranked = np.argsort(-initial.feature_importances(), kind="stable")
        top = set(ranked[:15].tolist())
        _, kept = feature_eliminate(
            rf_trainer(), M, y, M, y, mode="recursive",
            select_features=select_features, start=15, candidates=[5, 10],
        )
        assert set(kept.tolist()) <= top

    def test_monotone_case_returns_max(self):
        # every candidate evaluates perfectly except smaller ones are
        # made worse by construction: strictly increasing accuracy in
        # n_top must return the range maximum
        M, y = elimination_fixture()

        class FakeModel:
            def __init__(self, n_features):
                self.n = n_features

            def feature_importances(self):
                return np.linspace(1.0, 0.1, self.n)

            def predict(self, X, threshold=None):
                # more features -> more correct predictions
                preds = 1 - y[: X.shape[0]].copy()
                preds[: X.shape[1] * 5] = y[: X.shape[1] * 5]
                return preds

        def fake_trainer(X, yy):
            return FakeModel(X.shape[1])

        n_top, _ = feature_eliminate(
            fake_trainer, M, y, M, y, mode="nonrecursive",
            select_features=select_features, start=20,
            candidates=list(range(5, 21, 5)),
        )
        assert n_top == 20

    def test_tie_prefers_smaller(self):
        M, y = elimination_fixture()

        class ConstantModel:
            def feature_importances(self):
                return np.ones(M.shape[1])

            def predict(self, X, threshold=None):
                return np.zeros(X.shape[0], dtype=int)

        n_top, _ = feature_eliminate(
            lambda X, yy: ConstantModel(), M, y, M, y,
            mode="nonrecursive", select_features=select_features,
            start=20, candidates=[5, 10, 15],
        )
        assert n_top == 5

    def test_too_few_features(self):
        M, y = elimination_fixture(n_features=8)
        with pytest.raises(ValueError, match="features"):
            feature_eliminate(
                rf_trainer(), M, y, M, y, mode="recursive",
                select_features=select_features, start=8,
                candidates=[10, 20],
            )

    def test_recursive_vs_nonrecursive_both_run(self):
        M, y = elimination_fixture()
        for mode in ("recursive", "nonrecursive"):
            n_top, kept = feature_eliminate(
                rf_trainer(), M, y, M, y, mode=mode,
                select_features=select_features, start=20,
                candidates=[5, 10, 15],
            )
            assert n_top in (5, 10, 15)
            assert len(kept) == n_top


class TestBayesOpt:
    def test_quadratic_converges(self):
        space = SearchSpace({"x": ("continuous", 0.0, 1.0)})
        hits = 0
        for seed in range(10):
            result = bayes_opt(
                lambda p: (p["x"] - 0.3) ** 2, space, n_iter=30, seed=seed
            )
            hits += abs(result.best_params["x"] - 0.3) < 0.05
        assert hits >= 9

    def test_zero_iterations_returns_best_init(self):
        space = SearchSpace({"x": ("continuous", 0.0, 1.0)})
        result = bayes_opt(
            lambda p: (p["x"] - 0.3) ** 2, space, n_iter=0, n_init=5,
            seed=1,
        )
        assert len(result.log) == 5
        assert result.best_error == min(e for _, e in result.log)

    def test_total_evaluations(self):
        space = SearchSpace({"x": ("continuous", 0.0, 1.0)})
        result = bayes_opt(lambda p: p["x"], space, n_iter=7, n_init=4,
                           seed=0)
        assert len(result.log) == 11

    def test_discrete_rounding(self):
        space = SearchSpace({"c": [1.0, 2.0, 3.0, 4.0]})
        result = bayes_opt(lambda p: abs(p["c"] - 3.0), space, n_iter=10,
                           seed=3)
        assert all(entry[0]["c"] in space.params["c"]
                   for entry in result.log)
        assert result.best_params["c"] == 3.0

    def test_mixed_space(self):
        space = SearchSpace(
            {"x": ("continuous", 0.0, 1.0), "k": [1, 2, 4]}
        )
        result = bayes_opt(
            lambda p: (p["x"] - 0.5) ** 2 + 0.01 * p["k"], space,
            n_iter=15, seed=5,
        )
        assert result.best_params["k"] in (1, 2, 4)
        assert abs(result.best_params["x"] - 0.5) < 0.15

    def test_failure_recorded_as_worst_plus_one(self):
        space = SearchSpace({"x": ("continuous", 0.0, 1.0)})
        calls = []

        def objective(p):
            calls.append(p["x"])
            if len(calls) == 3:
                raise RuntimeError("boom")
            return p["x"]

        result = bayes_opt(objective, space, n_iter=0, n_init=5, seed=2)
        errors = [e for _, e in result.log]
        assert errors[2] == max(errors[:2]) + 1.0

    def test_deterministic(self):
        space = SearchSpace({"x": ("continuous", 0.0, 1.0)})
        r1 = bayes_opt(lambda p: (p["x"] - 0.7) ** 2, space, n_iter=8,
                       seed=11)
        r2 = bayes_opt(lambda p: (p["x"] - 0.7) ** 2, space, n_iter=8,
                       seed=11)
        assert r1.log == r2.log

    def test_best_error_nonincreasing_in_budget(self):
        space = SearchSpace({"x": ("continuous", 0.0, 1.0)})
        errors = []
        for n_iter in (0, 5, 15):
            result = bayes_opt(
                lambda p: (p["x"] - 0.42) ** 2, space, n_iter=n_iter,
                seed=6,
            )
            errors.append(result.best_error)
        assert errors[0] >= errors[1] >= errors[2]


class TestTuningLog:
    def test_csv_export(self, tmp_path):
        result = grid_search(
            lambda p: p["x"], SearchSpace({"x": [2.0, 1.0]})
        )
        path = tmp_path / "log.csv"
        write_tuning_log(result, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,x,error"
        assert lines[1] == "0,2.0,2.0"
        assert lines[2] == "1,1.0,1.0"
