"""Linear SVM over naive-Bayes log-count-ratio features.

Binary presence vectors are scaled elementwise by

    r = log( (p / ||p||_1) / (q / ||q||_1) ),
    p = alpha + sum of positive-class rows,
    q = alpha + sum of negative-class rows,

a squared-hinge SVM is trained on the scaled inputs, and the learned
feature weights are interpolated toward their mean magnitude:
w' = (1 - beta) * mean(|w|) + beta * w. The bias is carried unchanged.
"""

from __future__ import annotations

import numpy as np

from ..linalg import SparseMatrix, spmv
from .base import ThresholdMixin, check_binary_labels, load_container, \
    save_container
from .svm import LinearSvm


def _require_binary(X):
    weighting = getattr(X, "weighting", None)
    if weighting is not None and weighting != "binary":
        raise ValueError(
            f"NB-SVM requires a binary-weighted matrix, got {weighting!r}"
        )
    if X.data.size and not np.all(X.data == 1.0):
        raise ValueError("NB-SVM requires a binary (0/1) matrix")


class NbSvm(ThresholdMixin):
    model_type = "nbsvm"
    threshold = 0.0

    def __init__(self, alpha_nb=1.0, beta=1.0, c=0.001, fit_intercept=True):
        if alpha_nb <= 0:
            raise ValueError("alpha_nb must be positive")
        if not 0.0 <= beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        self.alpha_nb = float(alpha_nb)
        self.beta = float(beta)
        self.c = float(c)
        self.fit_intercept = bool(fit_intercept)
        self.log_count_ratio = None
        self.weights = None  # interpolated w'
        self.raw_weights = None  # SVM weights before interpolation
        self.bias = 0.0

    @staticmethod
    def log_count_ratio_for(X, y, alpha_nb):
        """r vector for binary X and {0,1} labels (both classes present)."""
        _require_binary(X)
        y = check_binary_labels(y, X.shape[0])
        pos = (y == 1).astype(np.float64)
        neg = 1.0 - pos
        p = alpha_nb + X.rmatvec(pos)
        q = alpha_nb + X.rmatvec(neg)
        return np.log((p / p.sum()) / (q / q.sum()))

    def fit(self, X, y, X_val=None, y_val=None):
        r = self.log_count_ratio_for(X, y, self.alpha_nb)
        rows, cols, _ = X.to_triplets()
        scaled = SparseMatrix(X.shape[0], X.shape[1], rows, cols, r[cols])
        svm = LinearSvm(c=self.c, fit_intercept=self.fit_intercept)
        svm.fit(scaled, y)
        w = svm.weights
        if self.beta == 1.0:
            w_prime = w.copy()
        else:
            w_bar = float(np.mean(np.abs(w)))
            w_prime = (1.0 - self.beta) * w_bar + self.beta * w
        self.log_count_ratio = r
        self.raw_weights = w
        self.weights = w_prime
        self.bias = svm.bias
        return self

    def score(self, X):
        """Signed margin of the scaled input: (x o r) . w' + b."""
        if self.weights is None:
            raise RuntimeError("model is not fitted")
        _require_binary(X)
        # x is 0/1, so (x o r) . w' reduces to x . (r o w')
        return spmv(X, self.log_count_ratio * self.weights) + self.bias

    def save(self, path):
        save_container(
            path,
            self.model_type,
            {
                "log_count_ratio": self.log_count_ratio,
                "weights": self.weights,
                "raw_weights": self.raw_weights,
            },
            {
                "alpha_nb": self.alpha_nb,
                "beta": self.beta,
                "c": self.c,
                "bias": self.bias,
                "fit_intercept": self.fit_intercept,
            },
        )

    @classmethod
    def load(cls, path):
        model_type, arrays, meta = load_container(path)
        if model_type != cls.model_type:
            raise ValueError(f"expected a {cls.model_type} archive")
        model = cls(
            alpha_nb=meta["alpha_nb"],
            beta=meta["beta"],
            c=meta["c"],
            fit_intercept=meta["fit_intercept"],
        )
        model.log_count_ratio = arrays["log_count_ratio"]
        model.weights = arrays["weights"]
        model.raw_weights = arrays["raw_weights"]
        model.bias = meta["bias"]
        return model
