"""Random forest of CART trees: Gini impurity, per-tree bootstrap, and a
per-split candidate pool of ceil(sqrt(n_features)) features.

Trees grow until nodes are pure or no valid split exists. Constant
features do not count against the per-split budget: the candidate walk
continues through a seeded feature permutation until the budget of
splittable features has been evaluated (or features run out), so a tree
on consistent data always reaches purity. The predicted score is the
fraction of trees voting positive; leaf ties vote positive.

Every tree draws its RNG stream from a child of the master seed, so the
forest is reproducible and independent of any training-order concerns.
"""

from __future__ import annotations

import math

import numpy as np

from .base import ThresholdMixin, check_binary_labels, load_container, \
    save_container

DEFAULT_THRESHOLD = 0.47  # tuned classification cutoff

_DENSE_CACHE_LIMIT = 5e7  # max rows*cols for keeping a full dense copy


class _Columns:
    """Dense column access over a CSR matrix, with lazy caching."""

    def __init__(self, X):
        self.n_rows, self.n_cols = X.shape
        if hasattr(X, "to_triplets"):
            rows, cols, vals = X.to_triplets()
            order = np.lexsort((rows, cols))
            self._rows = rows[order]
            self._vals = vals[order]
            self._indptr = np.zeros(self.n_cols + 1, dtype=np.int64)
            np.add.at(self._indptr, cols + 1, 1)
            np.cumsum(self._indptr, out=self._indptr)
            self._dense = None
            if self.n_rows * self.n_cols <= _DENSE_CACHE_LIMIT:
                dense = np.zeros((self.n_rows, self.n_cols))
                dense[rows, cols] = vals
                self._dense = dense
        else:
            self._dense = np.asarray(X, dtype=np.float64)

    def column(self, j):
        if self._dense is not None:
            return self._dense[:, j]
        lo, hi = self._indptr[j], self._indptr[j + 1]
        out = np.zeros(self.n_rows)
        out[self._rows[lo:hi]] = self._vals[lo:hi]
        return out


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "vote")

    def __init__(self, feature, threshold, left, right, vote):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.vote = vote

    @property
    def n_nodes(self):
        return len(self.feature)


def _gini(n_pos, n):
    p = n_pos / n
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


def _best_split_for_feature(values, y01):
    """(weighted child impurity, threshold, decrease terms) or None."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    ys = y01[order]
    n = v.size
    boundary = np.flatnonzero(v[:-1] < v[1:])
    if boundary.size == 0:
        return None
    prefix_pos = np.cumsum(ys)
    n_left = boundary + 1.0
    n_right = n - n_left
    pos_left = prefix_pos[boundary]
    pos_right = prefix_pos[-1] - pos_left
    pl = pos_left / n_left
    pr = pos_right / n_right
    gini_left = 1.0 - pl * pl - (1.0 - pl) ** 2
    gini_right = 1.0 - pr * pr - (1.0 - pr) ** 2
    weighted = (n_left * gini_left + n_right * gini_right) / n
    k = int(np.argmin(weighted))
    b = boundary[k]
    threshold = 0.5 * (v[b] + v[b + 1])
    return (
        float(weighted[k]),
        threshold,
        float(n_left[k] * gini_left[k] + n_right[k] * gini_right[k]),
    )


def _build_tree(columns, y, sample_idx, rng, k_features, importance, n_root):
    feature, threshold, left, right, vote = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        vote.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, sample_idx)]
    n_cols = columns.n_cols
    while stack:
        node, samples = stack.pop()
        ys = y[samples]
        n = samples.size
        n_pos = int(ys.sum())
        if n_pos == 0 or n_pos == n:
            vote[node] = 1 if n_pos > 0 else 0
            continue
        node_gini = _gini(n_pos, n)
        perm = rng.permutation(n_cols)
        best = None
        evaluated = 0
        for feat in perm:
            values = columns.column(feat)[samples]
            split = _best_split_for_feature(values, ys)
            if split is None:
                continue
            evaluated += 1
            if best is None or split[0] < best[0]:
                best = (split[0], int(feat), split[1], split[2])
            if evaluated >= k_features:
                break
        if best is None:
            vote[node] = 1 if 2 * n_pos >= n else 0
            continue
        _, feat, thr, child_impurity = best
        go_left = columns.column(feat)[samples] <= thr
        importance[feat] += (n * node_gini - child_impurity) / n_root
        left_id = new_node()
        right_id = new_node()
        feature[node] = feat
        threshold[node] = thr
        left[node] = left_id
        right[node] = right_id
        stack.append((right_id, samples[~go_left]))
        stack.append((left_id, samples[go_left]))
    return _Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(vote, dtype=np.int64),
    )


def _tree_votes(tree, columns):
    n = columns.n_rows
    cur = np.zeros(n, dtype=np.int64)
    alive = tree.feature[cur] >= 0
    while alive.any():
        idx = np.flatnonzero(alive)
        feats = tree.feature[cur[idx]]
        vals = np.empty(idx.size)
        for f in np.unique(feats):
            sel = feats == f
            vals[sel] = columns.column(int(f))[idx[sel]]
        go_left = vals <= tree.threshold[cur[idx]]
        nxt = np.where(go_left, tree.left[cur[idx]], tree.right[cur[idx]])
        cur[idx] = nxt
        alive[idx] = tree.feature[nxt] >= 0
    return tree.vote[cur]


class RandomForest(ThresholdMixin):
    model_type = "rf"

    def __init__(self, n_trees=1000, seed=0, threshold=DEFAULT_THRESHOLD,
                 bootstrap=True):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < threshold < 1.0:
            raise ValueError("threshold must lie in (0, 1)")
        self.n_trees = int(n_trees)
        self.seed = int(seed)
        self.threshold = float(threshold)
        self.bootstrap = bool(bootstrap)
        self.trees = None
        self.n_features = None
        self._importance = None

    def fit(self, X, y, X_val=None, y_val=None):
        y = check_binary_labels(y, X.shape[0])
        n, n_features = X.shape
        columns = _Columns(X)
        k = min(int(math.ceil(math.sqrt(n_features))), n_features)
        importance = np.zeros(n_features)
        trees = []
        children = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        for child in children:
            rng = np.random.default_rng(child)
            if self.bootstrap:
                sample = np.sort(rng.integers(0, n, size=n))
            else:
                sample = np.arange(n)
            trees.append(
                _build_tree(columns, y, sample, rng, k, importance, n)
            )
        self.trees = trees
        self.n_features = n_features
        self._importance = importance / self.n_trees
        return self

    def score(self, X):
        """Fraction of trees voting positive, in [0, 1]."""
        if self.trees is None:
            raise RuntimeError("model is not fitted")
        columns = _Columns(X)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += _tree_votes(tree, columns)
        return votes / self.n_trees

    def feature_importances(self):
        """Mean impurity decrease per feature, normalized to sum to 1."""
        if self._importance is None:
            raise RuntimeError("model is not fitted")
        total = self._importance.sum()
        if total <= 0:
            return np.zeros_like(self._importance)
        return self._importance / total

    def save(self, path):
        if self.trees is None:
            raise RuntimeError("model is not fitted")
        offsets = np.cumsum([0] + [t.n_nodes for t in self.trees])
        arrays = {
            "offsets": offsets,
            "feature": np.concatenate([t.feature for t in self.trees]),
            "threshold": np.concatenate([t.threshold for t in self.trees]),
            "left": np.concatenate([t.left for t in self.trees]),
            "right": np.concatenate([t.right for t in self.trees]),
            "vote": np.concatenate([t.vote for t in self.trees]),
            "importance": self._importance,
        }
        save_container(
            path,
            self.model_type,
            arrays,
            {
                "n_trees": self.n_trees,
                "seed": self.seed,
                "threshold": self.threshold,
                "bootstrap": self.bootstrap,
                "n_features": self.n_features,
            },
        )

    @classmethod
    def load(cls, path):
        model_type, arrays, meta = load_container(path)
        if model_type != cls.model_type:
            raise ValueError(f"expected a {cls.model_type} archive")
        model = cls(
            n_trees=meta["n_trees"],
            seed=meta["seed"],
            threshold=meta["threshold"],
            bootstrap=meta["bootstrap"],
        )
        offsets = arrays["offsets"]
        trees = []
        for i in range(model.n_trees):
            lo, hi = offsets[i], offsets[i + 1]
            trees.append(
                _Tree(
                    arrays["feature"][lo:hi],
                    arrays["threshold"][lo:hi],
                    arrays["left"][lo:hi],
                    arrays["right"][lo:hi],
                    arrays["vote"][lo:hi],
                )
            )
        model.trees = trees
        model.n_features = meta["n_features"]
        model._importance = arrays["importance"]
        return model
