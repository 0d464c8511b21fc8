"""Embedding-bag classifiers: a lookup table pooled by sum or average,
a single sigmoid output unit, dropout on the pooled vector, and
minibatch Adam on binary cross-entropy with patience-based early
stopping.

Inputs are documents as sets of distinct unigram indices (binarized
unigram features). Empty documents pool to the zero vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import ThresholdMixin, check_binary_labels, load_container, \
    save_container

# tuned defaults: (dropout, patience, embed_dim, batch_size, learning_rate)
AVG_DEFAULTS = dict(dropout=0.75, patience=10, embed_dim=64, batch_size=32,
                    learning_rate=0.001)
SUM_DEFAULTS = dict(dropout=0.86, patience=5, embed_dim=64, batch_size=256,
                    learning_rate=0.00001)


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class TrainPlan:
    learning_rate: float = 0.001
    batch_size: int = 32
    patience: int = 10
    max_epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class AdamState:
    """First/second moment accumulators and step count."""

    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params):
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(params, grads, state, lr):
    """One bias-corrected Adam update; returns (new_params, state)."""
    state.t += 1
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if not np.all(np.isfinite(g)):
            raise TrainingDiverged("non-finite gradient")
        state.m[i] = state.beta1 * state.m[i] + (1 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1 - state.beta2) * g * g
        m_hat = state.m[i] / (1 - state.beta1**state.t)
        v_hat = state.v[i] / (1 - state.beta2**state.t)
        out.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out, state


class EmbeddingNet:
    """pooling is "sum" or "avg"; dropout applies to the pooled vector
    during training only (inverted scaling)."""

    def __init__(self, n_features, embed_dim=64, pooling="avg",
                 dropout=0.75):
        if pooling not in ("sum", "avg"):
            raise ValueError(f"unknown pooling {pooling!r}")
        if not 0.0 <= dropout <= 0.9:
            raise ValueError("dropout must lie in [0, 0.9]")
        self.n_features = int(n_features)
        self.embed_dim = int(embed_dim)
        self.pooling = pooling
        self.dropout = float(dropout)
        self.embeddings = None  # (n_features, embed_dim)
        self.out_weights = None  # (embed_dim,)
        self.out_bias = 0.0

    def init_params(self, rng, train_prevalence=0.5):
        """Embeddings uniform in +-1/sqrt(e); output weights zero; bias
        set to the log-odds of the training prevalence."""
        bound = 1.0 / np.sqrt(self.embed_dim)
        self.embeddings = rng.uniform(
            -bound, bound, size=(self.n_features, self.embed_dim)
        )
        self.out_weights = np.zeros(self.embed_dim)
        p = min(max(train_prevalence, 1e-12), 1 - 1e-12)
        self.out_bias = float(np.log(p / (1 - p)))

    def _check_docs(self, docs):
        for doc in docs:
            if doc.size and (doc.min() < 0 or doc.max() >= self.n_features):
                raise ValueError("feature index out of vocabulary range")

    def pooled(self, docs):
        """Pooled document vectors, (n_docs, embed_dim)."""
        out = np.zeros((len(docs), self.embed_dim))
        for i, doc in enumerate(docs):
            if doc.size:
                h = self.embeddings[doc].sum(axis=0)
                if self.pooling == "avg":
                    h /= doc.size
                out[i] = h
        return out

    def logits(self, docs):
        return self.pooled(docs) @ self.out_weights + self.out_bias

    def forward(self, docs):
        """Positive-class probabilities; dropout disabled."""
        self._check_docs(docs)
        return _sigmoid(self.logits(docs))

    def params(self):
        return [self.embeddings, self.out_weights,
                np.array([self.out_bias])]

    def set_params(self, params):
        self.embeddings, self.out_weights = params[0], params[1]
        self.out_bias = float(params[2][0])


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce(logits, y):
    """Stable mean binary cross-entropy from logits."""
    return float(
        np.mean(np.maximum(logits, 0) - logits * y
                + np.log1p(np.exp(-np.abs(logits))))
    )


def nn_forward(net, doc):
    """Probability for a single document (array of present indices)."""
    doc = np.asarray(doc, dtype=np.int64)
    return float(net.forward([doc])[0])


def docs_from_binary_matrix(X):
    """Rows of a binary DTM as arrays of present feature indices."""
    if getattr(X, "weighting", "binary") != "binary":
        raise ValueError("neural inputs must be binarized")
    return [X.row_arrays(i)[0].copy() for i in range(X.shape[0])]


def _batch_gradients(net, docs, y, rng):
    """Loss and parameter gradients for one minibatch (dropout on)."""
    B = len(docs)
    h = net.pooled(docs)
    if net.dropout > 0:
        keep = (rng.random(h.shape) >= net.dropout).astype(np.float64)
        h_drop = h * keep / (1.0 - net.dropout)
    else:
        keep = None
        h_drop = h
    z = h_drop @ net.out_weights + net.out_bias
    loss = _bce(z, y)
    dz = (_sigmoid(z) - y) / B
    g_u = h_drop.T @ dz
    g_b = np.array([dz.sum()])
    dh = np.outer(dz, net.out_weights)
    if keep is not None:
        dh *= keep / (1.0 - net.dropout)
    g_E = np.zeros_like(net.embeddings)
    for i, doc in enumerate(docs):
        if doc.size:
            contrib = dh[i] / doc.size if net.pooling == "avg" else dh[i]
            np.add.at(g_E, doc, np.broadcast_to(
                contrib, (doc.size, net.embed_dim)))
    return loss, [g_E, g_u, g_b]


def nn_train(net, plan, train_docs, train_labels, val_docs, val_labels):
    """Train with minibatch Adam; return (net, history).

    history is a list of (epoch, train_loss, val_loss). Training stops
    when the validation loss has not improved for `patience` consecutive
    epochs (or at max_epochs); the parameters from the best-validation
    epoch are restored before returning.
    """
    train_labels = np.asarray(train_labels, dtype=np.float64)
    val_labels = np.asarray(val_labels, dtype=np.float64)
    if len(train_docs) == 0 or len(val_docs) == 0:
        raise ValueError("training and validation sets must be nonempty")
    if train_labels.min() == train_labels.max():
        raise ValueError("training labels contain a single class")
    net._check_docs(train_docs)
    net._check_docs(val_docs)
    rng = np.random.default_rng(plan.seed)
    if net.embeddings is None:
        net.init_params(rng, train_prevalence=float(train_labels.mean()))
    params = net.params()
    state = AdamState.for_params(params)
    best_val = np.inf
    best_params = [p.copy() for p in params]
    stall = 0
    history = []
    n = len(train_docs)
    for epoch in range(plan.max_epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, plan.batch_size):
            idx = order[start : start + plan.batch_size]
            batch_docs = [train_docs[i] for i in idx]
            net.set_params(params)
            loss, grads = _batch_gradients(
                net, batch_docs, train_labels[idx], rng
            )
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite training loss at epoch {epoch}"
                )
            params, state = adam_step(params, grads, state, plan.learning_rate)
            epoch_losses.append(loss)
        net.set_params(params)
        train_loss = float(np.mean(epoch_losses))
        val_loss = _bce(net.logits(val_docs), val_labels)
        history.append((epoch, train_loss, val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best_params = [p.copy() for p in params]
            stall = 0
        else:
            stall += 1
            if stall >= plan.patience:
                break
    net.set_params(best_params)
    return net, history


def write_loss_history(history, path):
    """CSV export: epoch, train_loss, val_loss."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch,train_loss,val_loss\n")
        for epoch, train_loss, val_loss in history:
            f.write(f"{epoch},{train_loss!r},{val_loss!r}\n")


class NeuralClassifier(ThresholdMixin):
    """fit/score wrapper over EmbeddingNet for binarized unigram DTMs."""

    threshold = 0.5

    def __init__(self, pooling="avg", embed_dim=None, dropout=None,
                 patience=None, batch_size=None, learning_rate=None,
                 max_epochs=200, seed=0):
        defaults = AVG_DEFAULTS if pooling == "avg" else SUM_DEFAULTS
        self.pooling = pooling
        self.embed_dim = embed_dim if embed_dim is not None else \
            defaults["embed_dim"]
        self.dropout = dropout if dropout is not None else \
            defaults["dropout"]
        self.plan = TrainPlan(
            learning_rate=learning_rate if learning_rate is not None
            else defaults["learning_rate"],
            batch_size=batch_size if batch_size is not None
            else defaults["batch_size"],
            patience=patience if patience is not None
            else defaults["patience"],
            max_epochs=max_epochs,
            seed=seed,
        )
        self.net = None
        self.history = None

    @property
    def model_type(self):
        return f"nn_{self.pooling}"

    def fit(self, X, y, X_val=None, y_val=None):
        y = check_binary_labels(y, X.shape[0])
        docs = docs_from_binary_matrix(X)
        if X_val is None or y_val is None:
            # hold out a deterministic tail slice when no validation set
            # is provided
            cut = max(1, len(docs) // 10)
            val_docs, val_labels = docs[-cut:], y[-cut:]
            docs, y = docs[:-cut], y[:-cut]
            if y.min() == y.max():
                raise ValueError(
                    "training labels contain a single class after the "
                    "validation holdout; pass an explicit validation set"
                )
        else:
            val_docs = docs_from_binary_matrix(X_val)
            val_labels = np.asarray(y_val, dtype=np.int64)
        net = EmbeddingNet(
            n_features=X.shape[1],
            embed_dim=self.embed_dim,
            pooling=self.pooling,
            dropout=self.dropout,
        )
        self.net, self.history = nn_train(
            net, self.plan, docs, y, val_docs, val_labels
        )
        return self

    def score(self, X):
        if self.net is None:
            raise RuntimeError("model is not fitted")
        return self.net.forward(docs_from_binary_matrix(X))

    def save(self, path):
        save_container(
            path,
            self.model_type,
            {
                "embeddings": self.net.embeddings,
                "out_weights": self.net.out_weights,
                "history": np.asarray(self.history, dtype=np.float64),
            },
            {
                "pooling": self.pooling,
                "embed_dim": self.embed_dim,
                "dropout": self.dropout,
                "out_bias": self.net.out_bias,
                "learning_rate": self.plan.learning_rate,
                "batch_size": self.plan.batch_size,
                "patience": self.plan.patience,
                "max_epochs": self.plan.max_epochs,
                "seed": self.plan.seed,
            },
        )

    @classmethod
    def load(cls, path):
        model_type, arrays, meta = load_container(path)
        if model_type not in ("nn_avg", "nn_sum"):
            raise ValueError("expected a neural model archive")
        model = cls(
            pooling=meta["pooling"],
            embed_dim=meta["embed_dim"],
            dropout=meta["dropout"],
            patience=meta["patience"],
            batch_size=meta["batch_size"],
            learning_rate=meta["learning_rate"],
            max_epochs=meta["max_epochs"],
            seed=meta["seed"],
        )
        net = EmbeddingNet(
            n_features=arrays["embeddings"].shape[0],
            embed_dim=meta["embed_dim"],
            pooling=meta["pooling"],
            dropout=meta["dropout"],
        )
        net.embeddings = arrays["embeddings"]
        net.out_weights = arrays["out_weights"]
        net.out_bias = meta["out_bias"]
        model.net = net
        model.history = [tuple(row) for row in arrays["history"]]
        return model
