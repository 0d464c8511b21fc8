"""Multinomial naive Bayes over term counts.

Per-class term likelihoods use Lidstone smoothing:
theta[c, w] = (alpha + count[c, w]) / (alpha * V + total[c]); the
positive-class score is the normalized posterior under equal treatment
of the two class log-likelihoods plus empirical log priors.
"""

from __future__ import annotations

import numpy as np

from ..linalg import spmv, spmtv
from .base import ThresholdMixin, check_binary_labels, load_container, \
    save_container

DEFAULT_ALPHA = 0.032683  # tuned smoothing default


class MultinomialNb(ThresholdMixin):
    model_type = "mnb"
    threshold = 0.5

    def __init__(self, alpha=DEFAULT_ALPHA):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)
        self.log_prior = None  # shape (2,)
        self.log_likelihood = None  # shape (2, n_features)

    def fit(self, X, y, X_val=None, y_val=None):
        y = check_binary_labels(y, X.shape[0])
        n_features = X.shape[1]
        log_lik = np.empty((2, n_features))
        log_prior = np.empty(2)
        for cls in (0, 1):
            mask = (y == cls).astype(np.float64)
            counts = spmtv(X, mask)
            total = counts.sum()
            log_lik[cls] = np.log(self.alpha + counts) - np.log(
                self.alpha * n_features + total
            )
            log_prior[cls] = np.log(mask.sum() / y.size)
        self.log_prior = log_prior
        self.log_likelihood = log_lik
        return self

    def class_log_posteriors(self, X):
        """Unnormalized log posteriors, shape (n_docs, 2)."""
        if self.log_likelihood is None:
            raise RuntimeError("model is not fitted")
        out = np.empty((X.shape[0], 2))
        for cls in (0, 1):
            out[:, cls] = spmv(X, self.log_likelihood[cls]) + self.log_prior[
                cls
            ]
        return out

    def score(self, X):
        """Posterior probability of the positive class, in [0, 1]."""
        lp = self.class_log_posteriors(X)
        # sigmoid of the log-posterior gap; 1 - p gives the exact
        # complement so the two posteriors sum to 1
        gap = lp[:, 1] - lp[:, 0]
        return 1.0 / (1.0 + np.exp(-gap))

    def save(self, path):
        save_container(
            path,
            self.model_type,
            {
                "log_prior": self.log_prior,
                "log_likelihood": self.log_likelihood,
            },
            {"alpha": self.alpha},
        )

    @classmethod
    def load(cls, path):
        model_type, arrays, meta = load_container(path)
        if model_type != cls.model_type:
            raise ValueError(f"expected a {cls.model_type} archive")
        model = cls(alpha=meta["alpha"])
        model.log_prior = arrays["log_prior"]
        model.log_likelihood = arrays["log_likelihood"]
        return model
