"""Latent Dirichlet allocation by collapsed Gibbs sampling, plus a
classifier that feeds inferred topic proportions to a linear SVM.

Documents enter as count matrices; tokens are expanded per row in
column order, which keeps the sweep order (and therefore the chain)
deterministic for a fixed seed. Held-out documents are folded in with
the topic-word counts frozen.
"""

from __future__ import annotations

import numpy as np

from .base import ThresholdMixin, check_binary_labels, load_container, \
    save_container
from .svm import LinearSvm

DEFAULT_SVM_C = 8.0  # tuned downstream SVM cost


def _expand_tokens(X):
    """Per-document word-id arrays (counts expanded, column order)."""
    docs = []
    for i in range(X.shape[0]):
        cols, vals = X.row_arrays(i)
        counts = np.rint(vals).astype(np.int64)
        if counts.size and counts.min() < 1:
            raise ValueError("LDA expects positive integer counts")
        docs.append(np.repeat(cols, counts))
    return docs


class LatentDirichletAllocation:
    """Collapsed Gibbs sampler with symmetric Dirichlet priors.

    alpha (doc-topic) and eta (topic-word) default to 1 / n_topics.
    """

    def __init__(self, n_topics=30, alpha=None, eta=None, n_iters=100,
                 seed=0, transform_iters=20):
        if n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        self.n_topics = int(n_topics)
        self.alpha = float(alpha) if alpha is not None else 1.0 / n_topics
        self.eta = float(eta) if eta is not None else 1.0 / n_topics
        self.n_iters = int(n_iters)
        self.seed = int(seed)
        self.transform_iters = int(transform_iters)
        self.topic_word = None  # (K, V) counts
        self.topic_totals = None  # (K,)
        self.n_features = None
        self.doc_topic_ = None  # training doc-topic counts

    def _sample_doc(self, rng, tokens, z, n_dk, topic_word, topic_totals,
                    update_words):
        eta_v = self.eta * self.n_features
        for t in range(tokens.size):
            w = tokens[t]
            k_old = z[t]
            n_dk[k_old] -= 1
            if update_words:
                topic_word[k_old, w] -= 1
                topic_totals[k_old] -= 1
            p = (topic_word[:, w] + self.eta) / (topic_totals + eta_v) * (
                n_dk + self.alpha
            )
            cum = np.cumsum(p)
            k_new = int(np.searchsorted(cum, rng.random() * cum[-1]))
            if k_new >= self.n_topics:  # numerical guard
                k_new = self.n_topics - 1
            z[t] = k_new
            n_dk[k_new] += 1
            if update_words:
                topic_word[k_new, w] += 1
                topic_totals[k_new] += 1

    def fit(self, X, y=None, X_val=None, y_val=None):
        self.n_features = X.shape[1]
        docs = _expand_tokens(X)
        K = self.n_topics
        rng = np.random.default_rng(self.seed)
        topic_word = np.zeros((K, self.n_features))
        topic_totals = np.zeros(K)
        n_dk = np.zeros((len(docs), K))
        assignments = []
        for d, tokens in enumerate(docs):
            z = rng.integers(0, K, size=tokens.size)
            assignments.append(z)
            for t, w in zip(z, tokens):
                topic_word[t, w] += 1
                topic_totals[t] += 1
                n_dk[d, t] += 1
        for _ in range(self.n_iters):
            for d, tokens in enumerate(docs):
                self._sample_doc(
                    rng, tokens, assignments[d], n_dk[d], topic_word,
                    topic_totals, update_words=True,
                )
        self.topic_word = topic_word
        self.topic_totals = topic_totals
        self.doc_topic_ = n_dk
        return self

    def _proportions(self, n_dk, doc_len):
        return (n_dk + self.alpha) / (doc_len + self.n_topics * self.alpha)

    def training_proportions(self):
        lens = self.doc_topic_.sum(axis=1, keepdims=True)
        return (self.doc_topic_ + self.alpha) / (
            lens + self.n_topics * self.alpha
        )

    def transform(self, X, seed=None):
        """Fold-in topic proportions for new documents; rows sum to 1.

        Topic-word counts stay frozen; empty documents get the uniform
        distribution (the prior). Deterministic for a fixed seed
        (defaults to the model seed + 1).
        """
        if self.topic_word is None:
            raise RuntimeError("model is not fitted")
        if X.shape[1] != self.n_features:
            raise ValueError("feature count does not match the fitted model")
        docs = _expand_tokens(X)
        K = self.n_topics
        rng = np.random.default_rng(self.seed + 1 if seed is None else seed)
        out = np.empty((len(docs), K))
        for d, tokens in enumerate(docs):
            n_dk = np.zeros(K)
            z = rng.integers(0, K, size=tokens.size)
            for t in z:
                n_dk[t] += 1
            for _ in range(self.transform_iters):
                self._sample_doc(
                    rng, tokens, z, n_dk, self.topic_word,
                    self.topic_totals, update_words=False,
                )
            out[d] = self._proportions(n_dk, tokens.size)
        return out


class LdaClassifier(ThresholdMixin):
    """Unsupervised topic proportions fed to a linear SVM."""

    model_type = "lda"
    threshold = 0.0

    def __init__(self, n_topics=30, c=DEFAULT_SVM_C, alpha=None, eta=None,
                 n_iters=100, seed=0, transform_iters=20):
        self.lda = LatentDirichletAllocation(
            n_topics=n_topics, alpha=alpha, eta=eta, n_iters=n_iters,
            seed=seed, transform_iters=transform_iters,
        )
        self.c = float(c)
        self.svm = None

    def fit(self, X, y, X_val=None, y_val=None):
        y = check_binary_labels(y, X.shape[0])
        self.lda.fit(X)
        features = self.lda.training_proportions()
        self.svm = LinearSvm(c=self.c).fit(features, y)
        return self

    def score(self, X):
        if self.svm is None:
            raise RuntimeError("model is not fitted")
        return self.svm.score(self.lda.transform(X))

    def save(self, path):
        save_container(
            path,
            self.model_type,
            {
                "topic_word": self.lda.topic_word,
                "topic_totals": self.lda.topic_totals,
                "svm_weights": self.svm.weights,
            },
            {
                "n_topics": self.lda.n_topics,
                "alpha": self.lda.alpha,
                "eta": self.lda.eta,
                "n_iters": self.lda.n_iters,
                "seed": self.lda.seed,
                "transform_iters": self.lda.transform_iters,
                "n_features": self.lda.n_features,
                "c": self.c,
                "svm_bias": self.svm.bias,
            },
        )

    @classmethod
    def load(cls, path):
        model_type, arrays, meta = load_container(path)
        if model_type != cls.model_type:
            raise ValueError(f"expected a {cls.model_type} archive")
        model = cls(
            n_topics=meta["n_topics"],
            c=meta["c"],
            alpha=meta["alpha"],
            eta=meta["eta"],
            n_iters=meta["n_iters"],
            seed=meta["seed"],
            transform_iters=meta["transform_iters"],
        )
        model.lda.topic_word = arrays["topic_word"]
        model.lda.topic_totals = arrays["topic_totals"]
        model.lda.n_features = meta["n_features"]
        model.svm = LinearSvm(c=meta["c"])
        model.svm.weights = arrays["svm_weights"]
        model.svm.bias = meta["svm_bias"]
        return model
