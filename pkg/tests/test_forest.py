import numpy as np
import pytest

from survbench.models import RandomForest, load_model
from survbench.textprep import DocTermMatrix


def dense_to_dtm(A, weighting="count"):
    rows, cols = np.nonzero(A)
    return DocTermMatrix(
        A.shape[0], A.shape[1], rows, cols, A[rows, cols], weighting
    )


@pytest.fixture
def consistent_data():
    rng = np.random.default_rng(10)
    X = rng.random((50, 4))
    y = (X[:, 2] > 0.5).astype(int)
    return dense_to_dtm(X), y


class TestRandomForest:
    def test_single_tree_memorizes_consistent_data(self, consistent_data):
        X, y = consistent_data
        model = RandomForest(n_trees=1, seed=0, bootstrap=False).fit(X, y)
        assert np.mean(model.predict(X) == y) == 1.0

    def test_unanimous_votes(self, consistent_data):
        X, y = consistent_data
        model = RandomForest(n_trees=5, seed=1, bootstrap=False).fit(X, y)
        scores = model.score(X)
        assert set(np.unique(scores)) <= {0.0, 1.0}

    def test_default_threshold(self):
        assert RandomForest().threshold == 0.47

    def test_threshold_tie_positive(self, consistent_data):
        X, y = consistent_data
        model = RandomForest(n_trees=4, seed=2).fit(X, y)
        scores = model.score(X)
        preds = model.predict(X, threshold=0.5)
        assert np.array_equal(preds, (scores >= 0.5).astype(int))

    def test_deterministic_for_seed(self, consistent_data):
        X, y = consistent_data
        s1 = RandomForest(n_trees=10, seed=7).fit(X, y).score(X)
        s2 = RandomForest(n_trees=10, seed=7).fit(X, y).score(X)
        assert np.array_equal(s1, s2)

    def test_different_seeds_differ(self, consistent_data):
        X, y = consistent_data
        s1 = RandomForest(n_trees=10, seed=7).fit(X, y).score(X)
        s2 = RandomForest(n_trees=10, seed=8).fit(X, y).score(X)
        assert not np.array_equal(s1, s2)

    def test_score_invariant_to_tree_order(self, consistent_data):
        X, y = consistent_data
        model = RandomForest(n_trees=8, seed=3).fit(X, y)
        base = model.score(X)
        rng = np.random.default_rng(0)
        model.trees = [model.trees[i] for i in rng.permutation(8)]
        assert np.array_equal(model.score(X), base)

    def test_empty_training_set(self):
        X = DocTermMatrix(0, 2, [], [], [], "count")
        with pytest.raises(ValueError):
            RandomForest(n_trees=1).fit(X, [])

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            RandomForest(n_trees=0)
        with pytest.raises(ValueError):
            RandomForest(threshold=1.0)

    def test_save_load_bitwise(self, tmp_path, consistent_data):
        X, y = consistent_data
        model = RandomForest(n_trees=6, seed=4).fit(X, y)
        path = tmp_path / "rf.npz"
        model.save(path)
        back = load_model(path)
        assert np.array_equal(back.score(X), model.score(X))
        assert np.array_equal(
            back.feature_importances(), model.feature_importances()
        )

    def test_sparse_and_dense_column_paths_agree(self, consistent_data,
                                                 monkeypatch):
        X, y = consistent_data
        base = RandomForest(n_trees=3, seed=5).fit(X, y).score(X)
        import survbench.models.forest as forest_mod

        monkeypatch.setattr(forest_mod, "_DENSE_CACHE_LIMIT", 0)
        no_cache = RandomForest(n_trees=3, seed=5).fit(X, y).score(X)
        assert np.array_equal(base, no_cache)


class TestFeatureImportance:
    def test_single_feature_all_importance(self):
        rng = np.random.default_rng(11)
        X = rng.random((30, 1))
        y = (X[:, 0] > 0.5).astype(int)
        model = RandomForest(n_trees=3, seed=0).fit(dense_to_dtm(X), y)
        assert model.feature_importances()[0] == pytest.approx(1.0)

    def test_unused_feature_zero(self):
        rng = np.random.default_rng(12)
        X = np.zeros((40, 2))
        X[:, 0] = rng.random(40)
        # feature 1 constant, never splittable
        y = (X[:, 0] > 0.5).astype(int)
        model = RandomForest(n_trees=5, seed=0).fit(dense_to_dtm(X), y)
        assert model.feature_importances()[1] == 0.0

    def test_informative_feature_ranks_higher(self):
        rng = np.random.default_rng(13)
        X = rng.random((80, 2))
        y = (X[:, 0] > 0.5).astype(int)  # labels depend on feature 0 only
        model = RandomForest(n_trees=20, seed=1).fit(dense_to_dtm(X), y)
        imp = model.feature_importances()
        assert imp[0] > imp[1]
        assert imp.sum() == pytest.approx(1.0)
        assert np.all(imp >= 0)
