"""Matplotlib renderings of experiment results, written as PNG files
next to the delimited outputs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_FIGSIZE = (7.0, 4.0)
_DPI = 120


def _save(fig, path):
    fig.savefig(path, dpi=_DPI, metadata={"Software": "survbench"})
    plt.close(fig)
    return path


def accuracy_by_model(result, path):
    """Split-level accuracy per model, with the mean marked."""
    names = result.succeeded()
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    for i, name in enumerate(names):
        values = [v for v in result.split_values(name, "acc")
                  if v is not None]
        ax.plot([i] * len(values), values, "o", color="#4878a8",
                alpha=0.45, markersize=5)
        ax.plot([i - 0.25, i + 0.25], [np.mean(values)] * 2, "-",
                color="#c44e52", linewidth=2)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("accuracy (%)")
    ax.set_title("Test accuracy across splits (mean in red)")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def prevalence_diff_by_model(result, path):
    """Mean excess positive calls per model with split-level points."""
    names = result.succeeded()
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    means = [np.mean(result.split_values(name, "diff_pos"))
             for name in names]
    ax.bar(range(len(names)), means, color="#4878a8", alpha=0.7)
    for i, name in enumerate(names):
        values = result.split_values(name, "diff_pos")
        ax.plot([i] * len(values), values, "o", color="#2b2b2b",
                alpha=0.4, markersize=4)
    ax.axhline(0.0, color="#c44e52", linewidth=1)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("positive calls minus true positives")
    ax.set_title("Prevalence bias across splits")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def loss_history(history, path, title="Training history"):
    """Train/validation loss curves from an (epoch, train, val) list."""
    history = np.asarray(history, dtype=np.float64)
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(history[:, 0], history[:, 1], label="train")
    ax.plot(history[:, 0], history[:, 2], label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("binary cross-entropy")
    ax.set_title(title)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def render_result_figures(result, out_dir):
    """The standard pair of result figures; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    return [
        accuracy_by_model(
            result, os.path.join(out_dir, "accuracy_by_model.png")
        ),
        prevalence_diff_by_model(
            result, os.path.join(out_dir, "diff_pos_by_model.png")
        ),
    ]
