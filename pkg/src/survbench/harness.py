"""Experiment orchestration: seeded train/validation/test splits, the
per-model fit/evaluate loop, referent comparisons, and the experiment
config file."""

from __future__ import annotations

import configparser
import logging
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import textprep
from .models import (
    LdaClassifier,
    LinearSvm,
    LsaClassifier,
    MultinomialNb,
    NbSvm,
    NeuralClassifier,
    RandomForest,
)
from .stats import Confusion, MetricRow, benjamini_yekutieli, confusion, \
    metrics, wilcoxon_signed_rank
from .synth import SynthSpec, synth_corpus

log = logging.getLogger("survbench")

DEFAULT_FRACTIONS = (0.57, 0.13, 0.30)


@dataclass
class SplitPlan:
    seeds: list
    fractions: tuple = DEFAULT_FRACTIONS

    def __post_init__(self):
        if len(self.seeds) != len(set(self.seeds)):
            raise ValueError("split seeds must be distinct")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ValueError("fractions must sum to 1")
        if any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be nonnegative")


def split(corpus, seed, fractions=DEFAULT_FRACTIONS, stratify=False):
    """Disjoint, exhaustive (train, val, test) index arrays.

    Sizes are the rounded fractions with the remainder going to test.
    Unstratified by default; stratify=True rounds within each label
    stratum instead. Identical seeds give identical splits.
    """
    n = len(corpus)
    if n < 3:
        raise ValueError("corpus must contain at least 3 documents")
    rng = np.random.default_rng(seed)
    if not stratify:
        perm = rng.permutation(n)
        return _cut(perm, fractions)
    labels = np.asarray([doc.label for doc in corpus])
    parts = [[], [], []]
    for value in (0, 1):
        stratum = np.flatnonzero(labels == value)
        pieces = _cut(rng.permutation(stratum.size), fractions)
        for bucket, piece in zip(parts, pieces):
            bucket.append(stratum[piece])
    return tuple(np.concatenate(p) for p in parts)


def _cut(perm, fractions):
    n = perm.size
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    n_train = min(n_train, n)
    n_val = min(n_val, n - n_train)
    return (
        perm[:n_train],
        perm[n_train : n_train + n_val],
        perm[n_train + n_val :],
    )


# ---------------------------------------------------------------------------
# model registry
# ---------------------------------------------------------------------------

@dataclass
class ModelSpec:
    """A named model plus the input representation it consumes."""

    name: str
    model_type: str
    ngrams: int
    weighting: str
    build: callable
    min_df: int = 1
    uses_validation: bool = False
    seed: int | None = None

    def base_seed(self):
        if self.seed is not None:
            return int(self.seed)
        return zlib.crc32(self.name.encode("utf-8"))


def _pop_float(params, key, default):
    return float(params.pop(key, default))


def _pop_int(params, key, default):
    return int(params.pop(key, default))


def make_model_spec(name, params):
    """ModelSpec from a config-style dict ({"type": ..., hyperparams})."""
    params = dict(params)
    model_type = params.pop("type")
    seed = params.pop("seed", None)
    common = dict(
        name=name,
        model_type=model_type,
        seed=int(seed) if seed is not None else None,
    )
    if model_type == "mnb":
        alpha = _pop_float(params, "alpha", 0.032683)
        spec = ModelSpec(
            **common,
            ngrams=_pop_int(params, "ngrams", 2),
            weighting="count",
            min_df=_pop_int(params, "min_df", 1),
            build=lambda seed: MultinomialNb(alpha=alpha),
        )
    elif model_type == "svm":
        c = _pop_float(params, "c", 0.0001)
        spec = ModelSpec(
            **common,
            ngrams=_pop_int(params, "ngrams", 2),
            weighting="count",
            min_df=_pop_int(params, "min_df", 1),
            build=lambda seed: LinearSvm(c=c),
        )
    elif model_type == "nbsvm":
        alpha_nb = _pop_float(params, "alpha_nb", 1.0)
        beta = _pop_float(params, "beta", 1.0)
        c = _pop_float(params, "c", 0.001)
        spec = ModelSpec(
            **common,
            ngrams=_pop_int(params, "ngrams", 2),
            weighting="binary",
            min_df=_pop_int(params, "min_df", 1),
            build=lambda seed: NbSvm(alpha_nb=alpha_nb, beta=beta, c=c),
        )
    elif model_type == "rf":
        n_trees = _pop_int(params, "n_trees", 1000)
        threshold = _pop_float(params, "threshold", 0.47)
        spec = ModelSpec(
            **common,
            ngrams=_pop_int(params, "ngrams", 2),
            weighting="tfidf",
            min_df=_pop_int(params, "min_df", 1),
            build=lambda seed: RandomForest(
                n_trees=n_trees, seed=seed, threshold=threshold
            ),
        )
    elif model_type == "lda":
        n_topics = _pop_int(params, "n_topics", 30)
        c = _pop_float(params, "c", 8.0)
        n_iters = _pop_int(params, "n_iters", 100)
        spec = ModelSpec(
            **common,
            ngrams=_pop_int(params, "ngrams", 1),
            weighting="count",
            min_df=_pop_int(params, "min_df", 1),
            build=lambda seed: LdaClassifier(
                n_topics=n_topics, c=c, n_iters=n_iters, seed=seed
            ),
        )
    elif model_type == "lsa":
        d = _pop_int(params, "d", 100)
        c = _pop_float(params, "c", 0.001)
        spec = ModelSpec(
            **common,
            ngrams=_pop_int(params, "ngrams", 2),
            weighting="count",
            min_df=_pop_int(params, "min_df", 1),
            build=lambda seed: LsaClassifier(d=d, c=c, seed=seed),
        )
    elif model_type in ("nn_avg", "nn_sum"):
        pooling = model_type.split("_")[1]
        if _pop_int(params, "ngrams", 1) != 1:
            raise ValueError("neural models are unigram-only")
        kwargs = {}
        for key in ("dropout", "learning_rate"):
            if key in params:
                kwargs[key] = float(params.pop(key))
        for key in ("patience", "embed_dim", "batch_size", "max_epochs"):
            if key in params:
                kwargs[key] = int(params.pop(key))
        spec = ModelSpec(
            **common,
            ngrams=1,
            weighting="binary",
            min_df=_pop_int(params, "min_df", 1),
            uses_validation=True,
            build=lambda seed: NeuralClassifier(
                pooling=pooling, seed=seed, **kwargs
            ),
        )
    else:
        raise ValueError(f"unknown model type {model_type!r}")
    if params:
        raise ValueError(
            f"unknown parameters for model {name!r}: {sorted(params)}"
        )
    return spec


# ---------------------------------------------------------------------------
# experiment loop
# ---------------------------------------------------------------------------

@dataclass
class CellResult:
    metrics: MetricRow
    confusion: Confusion
    wall_time: float


@dataclass
class ExperimentResult:
    model_names: list
    seeds: list
    cells: dict  # (model, seed) -> CellResult
    failures: dict = field(default_factory=dict)  # model -> message

    def split_values(self, name, attr):
        """Per-split metric values for one model, in seed order."""
        return [
            getattr(self.cells[(name, s)].metrics, attr) for s in self.seeds
        ]

    def succeeded(self):
        return [m for m in self.model_names if m not in self.failures]

    def mean_metrics(self, name):
        """Arithmetic means across splits; None-valued cells are skipped."""
        out = {}
        for attr in ("sens", "spec", "ppv", "npv", "f1", "acc", "n_pos",
                     "diff_pos"):
            values = [v for v in self.split_values(name, attr)
                      if v is not None]
            out[attr] = float(np.mean(values)) if values else None
        for attr in ("tp", "fp", "tn", "fn"):
            out[attr] = float(
                np.mean(
                    [getattr(self.cells[(name, s)].confusion, attr)
                     for s in self.seeds]
                )
            )
        return out


def _cell_seed(spec, split_seed):
    ss = np.random.SeedSequence([spec.base_seed(), int(split_seed)])
    return int(ss.generate_state(1)[0])


class _Representations:
    """Per-split cache of vocabularies and weighted matrices."""

    def __init__(self, token_lists, idx_train, idx_val, idx_test):
        self.tokens = token_lists
        self.idx = {"train": idx_train, "val": idx_val, "test": idx_test}
        self._vocab = {}
        self._counts = {}
        self._weighted = {}

    def vocabulary(self, ngrams, min_df):
        key = (ngrams, min_df)
        if key not in self._vocab:
            train_tokens = [self.tokens[i] for i in self.idx["train"]]
            self._vocab[key] = textprep.build_vocabulary(
                corpus=None, n_max=ngrams, min_df=min_df,
                token_lists=train_tokens,
            )
        return self._vocab[key]

    def counts(self, part, ngrams, min_df):
        key = (part, ngrams, min_df)
        if key not in self._counts:
            vocab = self.vocabulary(ngrams, min_df)
            part_tokens = [self.tokens[i] for i in self.idx[part]]
            self._counts[key] = textprep.build_matrix(
                corpus=None, vocab=vocab, token_lists=part_tokens
            )
        return self._counts[key]

    def matrix(self, part, ngrams, weighting, min_df):
        key = (part, ngrams, weighting, min_df)
        if key not in self._weighted:
            counts = self.counts(part, ngrams, min_df)
            if weighting == "count":
                mat = counts
            elif weighting == "binary":
                mat = textprep.binarize(counts)
            elif weighting == "tfidf":
                train_idf = textprep.compute_idf(
                    self.counts("train", ngrams, min_df)
                )
                mat = textprep.tfidf(counts, idf=train_idf)
            else:
                raise ValueError(f"unknown weighting {weighting!r}")
            self._weighted[key] = mat
        return self._weighted[key]


def run_experiment(corpus, specs, plan, stratify=False, stopwords=None):
    """Fit every model on every seeded split and collect MetricRows.

    Validation data is passed only to models that declare they use it.
    A model failure on any split marks that model's whole column failed
    and the run continues. Fully reproducible for a fixed plan.
    """
    labels = np.asarray(
        [-1 if doc.label is None else doc.label for doc in corpus],
        dtype=np.int64,
    )
    if np.any(labels < 0):
        raise ValueError("every document needs a label for an experiment")
    token_lists = [textprep.preprocess(doc.text, stopwords) for doc in corpus]
    names = [s.name for s in specs]
    if len(names) != len(set(names)):
        raise ValueError("model names must be unique")
    cells = {}
    failures = {}
    for split_seed in plan.seeds:
        idx_train, idx_val, idx_test = split(
            corpus, split_seed, plan.fractions, stratify=stratify
        )
        reps = _Representations(token_lists, idx_train, idx_val, idx_test)
        y_train = labels[idx_train]
        y_val = labels[idx_val]
        y_test = labels[idx_test]
        for spec in specs:
            if spec.name in failures:
                continue
            started = time.perf_counter()
            try:
                X_train = reps.matrix(
                    "train", spec.ngrams, spec.weighting, spec.min_df
                )
                X_test = reps.matrix(
                    "test", spec.ngrams, spec.weighting, spec.min_df
                )
                model = spec.build(_cell_seed(spec, split_seed))
                if spec.uses_validation:
                    X_val = reps.matrix(
                        "val", spec.ngrams, spec.weighting, spec.min_df
                    )
                    model.fit(X_train, y_train, X_val, y_val)
                else:
                    model.fit(X_train, y_train)
                preds = model.predict(X_test)
            except Exception as exc:  # isolate the failing column
                failures[spec.name] = f"seed {split_seed}: {exc}"
                log.warning("model %s failed on seed %s: %s", spec.name,
                            split_seed, exc)
                continue
            wall = time.perf_counter() - started
            conf = confusion(y_test, preds)
            cells[(spec.name, split_seed)] = CellResult(
                metrics=metrics(conf), confusion=conf, wall_time=wall
            )
            log.info("model %s seed %s: acc=%.2f%% (%.2fs)", spec.name,
                     split_seed, cells[(spec.name, split_seed)].metrics.acc,
                     wall)
    for name in failures:
        for seed in plan.seeds:
            cells.pop((name, seed), None)
    return ExperimentResult(
        model_names=names, seeds=list(plan.seeds), cells=cells,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# referent comparison
# ---------------------------------------------------------------------------

@dataclass
class ComparisonRow:
    model: str
    mean_value: float
    p_raw: float | None  # None on the referent row
    p_adj: float | None


@dataclass
class ComparisonTable:
    metric: str
    referent: str
    rows: list
    one_sample_diff_pos: dict  # model -> p for diff_pos centered on 0
    alpha: float = 0.05  # significance threshold, recorded not enforced


def compare_models(result, metric="accuracy"):
    """Paired Wilcoxon tests of every model against the referent.

    The referent has the best mean on the chosen metric (highest mean
    accuracy, or smallest |mean diff_pos|); raw paired p-values are
    FDR-adjusted by Benjamini-Yekutieli. The one-sample Wilcoxon of each
    model's diff_pos against 0 is always included.
    """
    if metric not in ("accuracy", "diff_pos"):
        raise ValueError(f"unknown comparison metric {metric!r}")
    models = result.succeeded()
    if len(models) < 2:
        raise ValueError("compare_models needs at least 2 models")
    if len(result.seeds) < 2:
        raise ValueError("compare_models needs at least 2 splits")
    attr = "acc" if metric == "accuracy" else "diff_pos"
    values = {m: np.asarray(result.split_values(m, attr), dtype=np.float64)
              for m in models}
    means = {m: float(values[m].mean()) for m in models}
    if metric == "accuracy":
        referent = max(models, key=lambda m: means[m])
    else:
        referent = min(models, key=lambda m: abs(means[m]))
    others = [m for m in models if m != referent]
    raw = [
        wilcoxon_signed_rank(values[referent], values[m], mode="paired").pvalue
        for m in others
    ]
    adjusted = benjamini_yekutieli(raw) if others else []
    rows = [ComparisonRow(referent, means[referent], None, None)]
    rows += [
        ComparisonRow(m, means[m], raw[i], float(adjusted[i]))
        for i, m in enumerate(others)
    ]
    one_sample = {
        m: wilcoxon_signed_rank(
            np.asarray(result.split_values(m, "diff_pos"), dtype=np.float64),
            mode="one-sample",
        ).pvalue
        for m in models
    }
    return ComparisonTable(
        metric=metric, referent=referent, rows=rows,
        one_sample_diff_pos=one_sample,
    )


# ---------------------------------------------------------------------------
# experiment config file
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    plan: SplitPlan
    specs: list
    output_dir: str
    stratify: bool = False
    corpus_path: str | None = None
    synth_spec: SynthSpec | None = None
    stopwords_path: str | None = None

    def load_corpus(self):
        if self.corpus_path is not None:
            return textprep.read_corpus(self.corpus_path)
        return synth_corpus(self.synth_spec)


def read_config(path):
    """Parse the key-value experiment config (INI sections)."""
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as f:
        parser.read_file(f)
    if "experiment" not in parser:
        raise ValueError(f"{path}: missing [experiment] section")
    exp = parser["experiment"]
    seeds = [int(s) for s in exp["seeds"].split()]
    fractions = (
        float(exp.get("train_frac", DEFAULT_FRACTIONS[0])),
        float(exp.get("val_frac", DEFAULT_FRACTIONS[1])),
        float(exp.get("test_frac", DEFAULT_FRACTIONS[2])),
    )
    plan = SplitPlan(seeds=seeds, fractions=fractions)
    corpus_path = None
    synth_spec = None
    if "corpus" in parser:
        corpus_path = parser["corpus"]["path"]
    elif "synth" in parser:
        s = parser["synth"]
        synth_spec = SynthSpec(
            n_docs=int(s["n_docs"]),
            separation=float(s.get("separation", 0.25)),
            prevalence=float(s.get("prevalence", 0.489)),
            vocab_size=int(s.get("vocab_size", 128)),
            length_median=float(
                s.get("length_median", SynthSpec.length_median)
            ),
            length_sigma=float(s.get("length_sigma", SynthSpec.length_sigma)),
            zipf_exponent=float(s.get("zipf_exponent", 1.0)),
            seed=int(s.get("seed", 0)),
        )
    else:
        raise ValueError(f"{path}: needs a [corpus] or [synth] section")
    specs = []
    for section in parser.sections():
        if section.startswith("model."):
            name = section[len("model.") :]
            specs.append(make_model_spec(name, dict(parser[section])))
    if not specs:
        raise ValueError(f"{path}: no [model.*] sections")
    return ExperimentConfig(
        plan=plan,
        specs=specs,
        output_dir=exp.get("output_dir", "."),
        stratify=exp.getboolean("stratify", fallback=False),
        corpus_path=corpus_path,
        synth_spec=synth_spec,
        stopwords_path=exp.get("stopwords", fallback=None),
    )
