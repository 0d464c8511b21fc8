"""Shared model plumbing: label validation, the score-threshold predict
contract, and the versioned save/load container.

Models persist as .npz archives holding their parameter arrays plus a
JSON metadata blob; float64 arrays round-trip bitwise, so a reloaded
model reproduces scores exactly.
"""

from __future__ import annotations

import json

import numpy as np

FORMAT_NAME = "survbench-model"
FORMAT_VERSION = 1


def check_binary_labels(y, n_rows=None):
    """Validate a {0,1} label vector with both classes present."""
    y = np.asarray(y, dtype=np.int64)
    if y.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if n_rows is not None and y.shape[0] != n_rows:
        raise ValueError(
            f"label length {y.shape[0]} does not match {n_rows} rows"
        )
    if y.size == 0:
        raise ValueError("empty training set")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("training labels contain a single class")
    return y


class ThresholdMixin:
    """predict = score >= threshold (ties classified positive)."""

    def predict(self, X, threshold=None):
        t = self.threshold if threshold is None else threshold
        return (self.score(X) >= t).astype(np.int64)


def save_container(path, model_type, arrays, meta):
    """Write a versioned model archive.

    arrays maps names to ndarrays; meta is a JSON-serializable dict of
    scalars/strings.
    """
    payload = {f"arr_{k}": np.asarray(v) for k, v in arrays.items()}
    payload["format"] = np.array(FORMAT_NAME)
    payload["format_version"] = np.array(FORMAT_VERSION)
    payload["model_type"] = np.array(model_type)
    payload["meta"] = np.array(json.dumps(meta, sort_keys=True))
    # write through a handle so the exact path is honored (np.savez
    # appends .npz to bare paths)
    with open(path, "wb") as f:
        np.savez(f, **payload)


def load_container(path):
    """Read a model archive back as (model_type, arrays, meta)."""
    with np.load(path, allow_pickle=False) as z:
        if str(z["format"]) != FORMAT_NAME:
            raise ValueError(f"{path}: not a {FORMAT_NAME} archive")
        version = int(z["format_version"])
        if version > FORMAT_VERSION:
            raise ValueError(
                f"{path}: format version {version} is newer than supported"
            )
        model_type = str(z["model_type"])
        meta = json.loads(str(z["meta"]))
        arrays = {
            k[4:]: z[k] for k in z.files if k.startswith("arr_")
        }
    return model_type, arrays, meta
