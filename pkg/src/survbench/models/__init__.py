"""The eight classifiers behind a uniform fit/score/predict contract.

Every model implements fit(X, y, X_val=None, y_val=None), score(X)
returning a per-document real score or probability, predict(X,
threshold=None) thresholding the score (ties positive), and
save/load via a versioned container that round-trips scores bitwise.
"""

from .base import load_container
from .forest import RandomForest
from .lda import LatentDirichletAllocation, LdaClassifier
from .lsa import LsaClassifier
from .mnb import MultinomialNb
from .nbsvm import NbSvm
from .neural import (
    AdamState,
    EmbeddingNet,
    NeuralClassifier,
    TrainPlan,
    TrainingDiverged,
    adam_step,
    nn_forward,
    nn_train,
)
from .svm import LinearSvm

_LOADERS = {
    "mnb": MultinomialNb,
    "svm": LinearSvm,
    "nbsvm": NbSvm,
    "rf": RandomForest,
    "lda": LdaClassifier,
    "lsa": LsaClassifier,
    "nn_avg": NeuralClassifier,
    "nn_sum": NeuralClassifier,
}


def load_model(path):
    """Load any saved model, dispatching on its stored type tag."""
    model_type, _, _ = load_container(path)
    if model_type not in _LOADERS:
        raise ValueError(f"unknown model type {model_type!r}")
    return _LOADERS[model_type].load(path)


__all__ = [
    "AdamState",
    "EmbeddingNet",
    "LatentDirichletAllocation",
    "LdaClassifier",
    "LinearSvm",
    "LsaClassifier",
    "MultinomialNb",
    "NbSvm",
    "NeuralClassifier",
    "RandomForest",
    "TrainPlan",
    "TrainingDiverged",
    "adam_step",
    "load_model",
    "nn_forward",
    "nn_train",
]
