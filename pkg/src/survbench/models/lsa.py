"""Latent semantic analysis: project the document-term matrix onto its
top right singular vectors and classify the projections with a linear
SVM."""

from __future__ import annotations

import numpy as np

from ..linalg import truncated_svd, _matmat
from .base import ThresholdMixin, check_binary_labels, load_container, \
    save_container
from .svm import LinearSvm

DEFAULT_RANK = 100
DEFAULT_SVM_C = 0.001

_RANK_TOL = 1e-10  # relative singular-value cutoff for rank detection


class LsaClassifier(ThresholdMixin):
    model_type = "lsa"
    threshold = 0.0

    def __init__(self, d=DEFAULT_RANK, c=DEFAULT_SVM_C, seed=0,
                 n_oversample=10, n_power_iters=4):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = int(d)
        self.c = float(c)
        self.seed = int(seed)
        self.n_oversample = int(n_oversample)
        self.n_power_iters = int(n_power_iters)
        self.components = None  # Vt, (d, n_features)
        self.singular_values = None
        self.svm = None

    def fit(self, X, y, X_val=None, y_val=None):
        y = check_binary_labels(y, X.shape[0])
        _, S, Vt = truncated_svd(
            X, self.d, self.seed, n_oversample=self.n_oversample,
            n_power_iters=self.n_power_iters,
        )
        achievable = int(np.sum(S > _RANK_TOL * max(S[0], 1e-300)))
        if achievable < self.d:
            raise ValueError(
                f"matrix rank {achievable} is below the requested "
                f"dimensionality {self.d}"
            )
        self.components = Vt
        self.singular_values = S
        self.svm = LinearSvm(c=self.c).fit(self.transform(X), y)
        return self

    def transform(self, X):
        """Project rows onto the top right singular vectors (n_docs, d)."""
        if self.components is None:
            raise RuntimeError("model is not fitted")
        return _matmat(X, self.components.T)

    def score(self, X):
        if self.svm is None:
            raise RuntimeError("model is not fitted")
        return self.svm.score(self.transform(X))

    def save(self, path):
        save_container(
            path,
            self.model_type,
            {
                "components": self.components,
                "singular_values": self.singular_values,
                "svm_weights": self.svm.weights,
            },
            {
                "d": self.d,
                "c": self.c,
                "seed": self.seed,
                "n_oversample": self.n_oversample,
                "n_power_iters": self.n_power_iters,
                "svm_bias": self.svm.bias,
            },
        )

    @classmethod
    def load(cls, path):
        model_type, arrays, meta = load_container(path)
        if model_type != cls.model_type:
            raise ValueError(f"expected a {cls.model_type} archive")
        model = cls(
            d=meta["d"],
            c=meta["c"],
            seed=meta["seed"],
            n_oversample=meta["n_oversample"],
            n_power_iters=meta["n_power_iters"],
        )
        model.components = arrays["components"]
        model.singular_values = arrays["singular_values"]
        model.svm = LinearSvm(c=meta["c"])
        model.svm.weights = arrays["svm_weights"]
        model.svm.bias = meta["svm_bias"]
        return model
