"""Binary-classification metrics, Wilcoxon signed-rank tests, and
Benjamini-Yekutieli false-discovery-rate adjustment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

__all__ = [
    "Confusion",
    "MetricRow",
    "confusion",
    "metrics",
    "WilcoxonResult",
    "wilcoxon_signed_rank",
    "benjamini_yekutieli",
]


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricRow:
    """Rates as percentages in [0, 100]; None encodes an undefined 0/0.

    n_pos is the number of positive calls; diff_pos is the signed excess
    of positive calls over true positives in the evaluation set, which
    always equals FP - FN.
    """

    sens: float | None
    spec: float | None
    ppv: float | None
    npv: float | None
    f1: float | None
    acc: float | None
    n_pos: int
    diff_pos: int


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape:
        raise ValueError(
            f"length mismatch: {y_true.shape} vs {y_pred.shape}"
        )
    for arr, name in ((y_true, "y_true"), (y_pred, "y_pred")):
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{name} must be binary")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return Confusion(tp=tp, fp=fp, tn=tn, fn=fn)


def _rate(num, den):
    return None if den == 0 else 100.0 * num / den


def metrics(c):
    """MetricRow from a Confusion; undefined ratios come back as None."""
    sens = _rate(c.tp, c.tp + c.fn)
    spec = _rate(c.tn, c.tn + c.fp)
    ppv = _rate(c.tp, c.tp + c.fp)
    npv = _rate(c.tn, c.tn + c.fn)
    if sens is None or ppv is None:
        f1 = None
    elif sens + ppv == 0:
        f1 = 0.0
    else:
        f1 = 2.0 * sens * ppv / (sens + ppv)
    acc = _rate(c.tp + c.tn, c.total)
    n_pos = c.tp + c.fp
    return MetricRow(
        sens=sens,
        spec=spec,
        ppv=ppv,
        npv=npv,
        f1=f1,
        acc=acc,
        n_pos=n_pos,
        diff_pos=n_pos - (c.tp + c.fn),
    )


class WilcoxonResult(NamedTuple):
    statistic: float  # W+ = sum of ranks of positive differences
    pvalue: float
    n: int  # nonzero differences used
    method: str  # "exact", "normal", or "degenerate"
    degenerate: bool


def _signed_ranks(diffs):
    """Midranks of |d| with signs; zero differences already removed."""
    absd = np.abs(diffs)
    order = np.argsort(absd, kind="stable")
    ranks = np.empty(len(diffs))
    sorted_abs = absd[order]
    i = 0
    ranks_sorted = np.empty(len(diffs))
    while i < len(diffs):
        j = i
        while j + 1 < len(diffs) and sorted_abs[j + 1] == sorted_abs[i]:
            j += 1
        ranks_sorted[i : j + 1] = (i + j) / 2.0 + 1.0
        i = j + 1
    ranks[order] = ranks_sorted
    return ranks, np.sign(diffs)


def _exact_pvalue(ranks, w_plus):
    """Two-sided p over all 2^n sign assignments, via the generating
    function of the rank multiset (doubled ranks keep midranks integer)."""
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    total = int(r2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    w2 = 2.0 * w_plus
    mu2 = total / 2.0
    dev = abs(w2 - mu2)
    lo = mu2 - dev
    hi = mu2 + dev
    support = np.arange(total + 1)
    mask = (support <= lo + 1e-9) | (support >= hi - 1e-9)
    return float(counts[mask].sum() / counts.sum())


def _normal_pvalue(ranks, w_plus):
    n = len(ranks)
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: subtract sum(t^3 - t)/48 over tie groups of |d|
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= np.sum(tie_counts**3 - tie_counts) / 48.0
    if var <= 0:
        return 1.0
    dev = w_plus - mu
    # continuity correction toward the mean
    z = (dev - 0.5 * np.sign(dev)) / math.sqrt(var)
    return float(min(1.0, 2.0 * (1.0 - ndtr(abs(z)))))


def wilcoxon_signed_rank(x, y=None, mode="paired", method="auto"):
    """Wilcoxon signed-rank test; two-sided.

    mode="paired" tests x - y symmetric about 0; mode="one-sample"
    tests x about 0. Zero differences are dropped, ties in |d| get
    midranks. The exact p enumerates all 2^n sign assignments (used for
    n <= 25 under method="auto"); larger n uses the normal approximation
    with tie-corrected variance and continuity correction.
    """
    x = np.asarray(x, dtype=np.float64)
    if mode == "paired":
        if y is None:
            raise ValueError("paired mode requires y")
        y = np.asarray(y, dtype=np.float64)
        if x.shape != y.shape:
            raise ValueError("paired samples must have equal length")
        diffs = x - y
    elif mode == "one-sample":
        if y is not None:
            raise ValueError("one-sample mode takes a single sample")
        diffs = x
    else:
        raise ValueError(f"unknown mode {mode!r}")
    diffs = diffs[diffs != 0]
    n = len(diffs)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0, "degenerate", True)
    ranks, signs = _signed_ranks(diffs)
    w_plus = float(ranks[signs > 0].sum())
    if method == "auto":
        method = "exact" if n <= 25 else "normal"
    if method == "exact":
        p = _exact_pvalue(ranks, w_plus)
    elif method == "normal":
        p = _normal_pvalue(ranks, w_plus)
    else:
        raise ValueError(f"unknown method {method!r}")
    return WilcoxonResult(w_plus, p, n, method, False)


def benjamini_yekutieli(pvalues):
    """Step-up FDR adjustment valid under arbitrary dependence.

    With p sorted ascending and c(m) the m-th harmonic number,
    adjusted_(i) = min(1, min_{j>=i} m * c(m) * p_(j) / j), mapped back
    to the input order.
    """
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("pvalues must be one-dimensional")
    if p.size == 0:
        return np.array([])
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    c_m = np.sum(1.0 / np.arange(1, m + 1))
    order = np.argsort(p, kind="stable")
    scaled = m * c_m * p[order] / np.arange(1, m + 1)
    adjusted_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    out = np.empty(m)
    out[order] = adjusted_sorted
    return out
