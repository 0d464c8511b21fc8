"""Synthetic labeled corpora with an analytically known optimal accuracy.

The vocabulary is laid out in pairs of equal base frequency (Zipf over
pairs). The positive class tilts each pair's first member up by the
separation factor and the second down; the negative class mirrors it:

    p_pos(first)  = z_i * (1 + s),   p_pos(second) = z_i * (1 - s)
    p_neg(first)  = z_i * (1 - s),   p_neg(second) = z_i * (1 + s)

Every token then carries a log-likelihood ratio of exactly
+-ln((1+s)/(1-s)), so the error of the Bayes-optimal (naive-Bayes)
classifier reduces to binomial tail probabilities mixed over the
document-length distribution, and is computable in closed form.
Separation 0 makes the two class distributions coincide.

Document lengths are rounded log-normal draws; the default parameters
match a long-document profile with quartiles 813 / 1,528 / 2,737 via
mu = ln(median), sigma = ln(Q3/Q1) / (2 * z_{0.75}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr
from scipy.stats import binom

from .textprep import Document

__all__ = [
    "SynthSpec",
    "synth_corpus",
    "optimal_accuracy",
    "separation_for_accuracy",
]

_Z75 = 0.6744897501960817  # standard normal 75th percentile

DEFAULT_LENGTH_MEDIAN = 1528.0
DEFAULT_LENGTH_SIGMA = math.log(2737.0 / 813.0) / (2.0 * _Z75)


@dataclass
class SynthSpec:
    n_docs: int
    separation: float = 0.25
    prevalence: float = 0.489
    vocab_size: int = 128
    length_median: float = DEFAULT_LENGTH_MEDIAN
    length_sigma: float = DEFAULT_LENGTH_SIGMA
    zipf_exponent: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_docs < 1:
            raise ValueError("n_docs must be >= 1")
        if not 0.0 < self.prevalence < 1.0:
            raise ValueError("prevalence must lie in (0, 1)")
        if not 0.0 <= self.separation < 1.0:
            raise ValueError("separation must lie in [0, 1)")
        if self.vocab_size < 2 or self.vocab_size % 2:
            raise ValueError("vocab_size must be an even number >= 2")
        if self.length_median < 1 or self.length_sigma <= 0:
            raise ValueError("degenerate document-length distribution")

    def class_distributions(self):
        """(p_pos, p_neg) over the vocabulary, each summing to 1."""
        n_pairs = self.vocab_size // 2
        base = (1.0 + np.arange(n_pairs)) ** -self.zipf_exponent
        base /= 2.0 * base.sum()  # per-member mass; total over vocab = 1
        p_pos = np.empty(self.vocab_size)
        p_pos[0::2] = base * (1.0 + self.separation)
        p_pos[1::2] = base * (1.0 - self.separation)
        p_neg = np.empty(self.vocab_size)
        p_neg[0::2] = base * (1.0 - self.separation)
        p_neg[1::2] = base * (1.0 + self.separation)
        return p_pos, p_neg

    def word(self, j):
        return f"w{j:04d}"


def synth_corpus(spec):
    """Generate the corpus described by spec; deterministic per seed."""
    rng = np.random.default_rng(spec.seed)
    p_pos, p_neg = spec.class_distributions()
    labels = (rng.random(spec.n_docs) < spec.prevalence).astype(np.int64)
    lengths = np.maximum(
        1,
        np.rint(
            rng.lognormal(
                math.log(spec.length_median), spec.length_sigma,
                spec.n_docs,
            )
        ).astype(np.int64),
    )
    words = np.array([spec.word(j) for j in range(spec.vocab_size)])
    docs = []
    for i in range(spec.n_docs):
        p = p_pos if labels[i] else p_neg
        tokens = words[rng.choice(spec.vocab_size, size=lengths[i], p=p)]
        docs.append(
            Document(
                id=f"doc{i:05d}",
                text=" ".join(tokens),
                label=int(labels[i]),
            )
        )
    return docs


def _length_pmf(spec, mass_tol=1e-9):
    """pmf of max(1, round(LogNormal)) truncated to cover 1 - mass_tol."""
    mu = math.log(spec.length_median)
    sigma = spec.length_sigma
    l_max = int(math.ceil(math.exp(mu + 8.0 * sigma)))
    lengths = np.arange(1, l_max + 1)
    upper = ndtr((np.log(lengths + 0.5) - mu) / sigma)
    lower = np.empty_like(upper)
    lower[0] = 0.0
    lower[1:] = upper[:-1]
    pmf = upper - lower
    total = pmf.sum()
    if total < 1.0 - mass_tol:
        raise RuntimeError("length distribution truncation too aggressive")
    keep = pmf > 0
    return lengths[keep], pmf[keep] / total


def optimal_accuracy(spec):
    """Expected accuracy of the Bayes-optimal classifier under spec.

    A document of length L with k tokens from its class-favored pair
    members has total log-likelihood ratio c*(2k - L) with
    c = ln((1+s)/(1-s)); adding the prior log-odds and thresholding at 0
    gives a binomial tail in k, mixed over the length pmf.
    """
    pi = spec.prevalence
    s = spec.separation
    if s == 0.0:
        return max(pi, 1.0 - pi)
    c = math.log((1.0 + s) / (1.0 - s))
    g = math.log(pi / (1.0 - pi))
    lengths, pmf = _length_pmf(spec)
    # decide positive iff k > tau(L); tie decides negative
    tau = np.floor((lengths - g / c) / 2.0)
    tau = np.clip(tau, -1, lengths)
    acc_pos = 1.0 - binom.cdf(tau, lengths, (1.0 + s) / 2.0)
    acc_neg = binom.cdf(tau, lengths, (1.0 - s) / 2.0)
    return float(np.sum(pmf * (pi * acc_pos + (1.0 - pi) * acc_neg)))


def separation_for_accuracy(target, spec, tol=1e-6):
    """Separation whose optimal accuracy hits target, by bisection.

    optimal_accuracy is monotone increasing in the separation, so the
    root is unique; target must lie between the separation-0 floor
    (majority-class accuracy) and 1.
    """
    floor = optimal_accuracy(replace(spec, separation=0.0))
    if not floor < target < 1.0:
        raise ValueError(
            f"target accuracy must lie in ({floor:.4f}, 1), got {target}"
        )
    lo, hi = 0.0, 1.0 - 1e-9
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if optimal_accuracy(replace(spec, separation=mid)) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
