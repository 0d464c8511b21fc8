"""Command-line entry point.

Subcommands: preprocess, dtm, train, predict, tune, synth, experiment,
compare, report. Exit codes: 0 success, 1 usage error, 2 data or model
error. Logs go to standard error; data goes to files or standard
output. All randomness is controlled by explicit seeds, so reruns with
identical inputs produce byte-identical data outputs.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import harness, reporting, textprep, tuning
from .models import load_model
from .synth import SynthSpec, separation_for_accuracy, synth_corpus

log = logging.getLogger("survbench")

MODEL_TYPES = ("mnb", "svm", "nbsvm", "rf", "lda", "lsa", "nn_avg", "nn_sum")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _open_err(path, kind="input"):
    return FileNotFoundError(f"missing {kind} file: {path}")


def _require_file(path):
    if not os.path.exists(path):
        raise _open_err(path)
    return path


def _default_out_dir(value):
    if value:
        return value
    return os.environ.get("SURVBENCH_OUT", ".")


def _parse_sets(pairs):
    params = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise _UsageError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        params[key.strip()] = value.strip()
    return params


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_preprocess(args):
    corpus = textprep.read_corpus(_require_file(args.corpus))
    stopwords = (
        textprep.load_stopwords(_require_file(args.stopwords))
        if args.stopwords
        else None
    )
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for doc in corpus:
            tokens = textprep.preprocess(doc.text, stopwords)
            out.write(f"{doc.id}\t{' '.join(tokens)}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_dtm(args):
    corpus = textprep.read_corpus(_require_file(args.corpus))
    stopwords = (
        textprep.load_stopwords(_require_file(args.stopwords))
        if args.stopwords
        else None
    )
    token_lists = [textprep.preprocess(d.text, stopwords) for d in corpus]
    if args.vocab_in:
        vocab = textprep.read_vocabulary(_require_file(args.vocab_in))
        if vocab.n_max != args.ngrams:
            raise ValueError(
                f"vocabulary n-gram order {vocab.n_max} does not match "
                f"--ngrams {args.ngrams}"
            )
    else:
        vocab = textprep.build_vocabulary(
            corpus, n_max=args.ngrams, min_df=args.min_df,
            token_lists=token_lists,
        )
    M = textprep.build_matrix(corpus, vocab, token_lists=token_lists)
    if args.weighting == "binary":
        M = textprep.binarize(M)
    elif args.weighting == "tfidf":
        # IDF comes from the vocabulary's document frequencies, so a
        # held-out corpus transformed under --vocab-in reuses the
        # training IDF
        M = textprep.tfidf(M, idf=textprep.idf_from_vocabulary(vocab))
    textprep.write_dtm(M, args.out)
    if args.vocab_out:
        textprep.write_vocabulary(vocab, args.vocab_out)
    if args.labels_out:
        labels = [d.label for d in corpus]
        if any(lab is None for lab in labels):
            raise ValueError("corpus has unlabeled documents; cannot write "
                             "a label file")
        textprep.write_labels(labels, args.labels_out)
    log.info("wrote %s (%d x %d, %d entries)", args.out, M.n_docs,
             M.n_features, M.nnz)
    return 0


def _build_model(model_type, params, seed):
    spec = harness.make_model_spec(
        model_type, {"type": model_type, **params}
    )
    return spec.build(seed)


def cmd_train(args):
    X = textprep.read_dtm(_require_file(args.dtm))
    y = textprep.read_labels(_require_file(args.labels))
    model = _build_model(args.model_type, _parse_sets(args.set), args.seed)
    if args.val_dtm and args.val_labels:
        X_val = textprep.read_dtm(_require_file(args.val_dtm))
        y_val = textprep.read_labels(_require_file(args.val_labels))
        model.fit(X, y, X_val, y_val)
    else:
        model.fit(X, y)
    model.save(args.out)
    if args.history_out:
        history = getattr(model, "history", None)
        if history is None:
            raise ValueError(
                f"{args.model_type} models record no loss history"
            )
        from .models.neural import write_loss_history

        write_loss_history(history, args.history_out)
    log.info("trained %s model -> %s", args.model_type, args.out)
    return 0


def cmd_predict(args):
    model = load_model(_require_file(args.model))
    X = textprep.read_dtm(_require_file(args.dtm))
    scores = model.score(X)
    threshold = model.threshold if args.threshold is None else args.threshold
    labels = (scores >= threshold).astype(np.int64)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for i, (lab, score) in enumerate(zip(labels, scores)):
            out.write(f"{i} {int(lab)} {float(score)!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _parse_space(grid_args, range_args):
    params = {}
    for pair in grid_args or []:
        name, values = pair.split("=", 1)
        params[name] = [float(v) for v in values.split(",")]
    for pair in range_args or []:
        name, bounds = pair.split("=", 1)
        lo, hi = (float(b) for b in bounds.split(":"))
        params[name] = ("continuous", lo, hi)
    if not params:
        raise _UsageError("tune needs at least one --grid or --range")
    return tuning.SearchSpace(params)


def _tune_inputs(args, fixed):
    """(X_train, y_train, X_val, y_val) from DTM files or a corpus.

    Corpus mode builds the model type's input representation over a
    dedicated train/validation split (--split-seed keeps the tuning
    split distinct from any experiment seeds).
    """
    if args.corpus:
        corpus = textprep.read_corpus(_require_file(args.corpus))
        labels = np.asarray(
            [-1 if d.label is None else d.label for d in corpus]
        )
        if labels.min() < 0:
            raise ValueError("tuning corpus has unlabeled documents")
        spec = harness.make_model_spec(
            args.model_type, {"type": args.model_type, **fixed}
        )
        rng = np.random.default_rng(args.split_seed)
        perm = rng.permutation(len(corpus))
        n_val = max(1, int(round(args.val_frac * len(corpus))))
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        tokens = [textprep.preprocess(d.text) for d in corpus]
        vocab = textprep.build_vocabulary(
            corpus, n_max=spec.ngrams, min_df=spec.min_df,
            token_lists=[tokens[i] for i in train_idx],
        )
        parts = []
        train_counts = None
        for idx in (train_idx, val_idx):
            counts = textprep.build_matrix(
                None, vocab, token_lists=[tokens[i] for i in idx]
            )
            if train_counts is None:
                train_counts = counts
            if spec.weighting == "binary":
                parts.append(textprep.binarize(counts))
            elif spec.weighting == "tfidf":
                parts.append(
                    textprep.tfidf(
                        counts, idf=textprep.compute_idf(train_counts)
                    )
                )
            else:
                parts.append(counts)
        return parts[0], labels[train_idx], parts[1], labels[val_idx]
    for flag in ("dtm", "labels", "val_dtm", "val_labels"):
        if getattr(args, flag) is None:
            raise _UsageError(
                "tune needs either --corpus or all of --dtm/--labels/"
                "--val-dtm/--val-labels"
            )
    return (
        textprep.read_dtm(_require_file(args.dtm)),
        textprep.read_labels(_require_file(args.labels)),
        textprep.read_dtm(_require_file(args.val_dtm)),
        textprep.read_labels(_require_file(args.val_labels)),
    )


def cmd_tune(args):
    fixed = _parse_sets(args.set)
    X, y, X_val, y_val = _tune_inputs(args, fixed)

    if args.method in ("rfe", "nrfe"):
        def train_rf(X_sub, y_sub):
            return _build_model("rf", fixed, args.seed).fit(X_sub, y_sub)

        mode = "recursive" if args.method == "rfe" else "nonrecursive"
        candidates = None
        if args.candidates:
            lo, hi, step = (int(v) for v in args.candidates.split(":"))
            candidates = list(range(lo, hi + 1, step))
        n_top, kept = tuning.feature_eliminate(
            train_rf, X, y, X_val, y_val, mode,
            select_features=textprep.select_features,
            start=args.start, candidates=candidates,
        )
        print(f"n_top {n_top}")
        if args.features_out:
            with open(args.features_out, "w", encoding="utf-8") as f:
                for j in kept:
                    f.write(f"{j}\n")
        return 0

    if args.method == "threshold":
        model = load_model(_require_file(args.model))
        best = tuning.threshold_sweep(model.score(X_val), y_val)
        print(f"threshold {best}")
        return 0

    def objective(params):
        rendered = dict(fixed)
        for key, value in params.items():
            rendered[key] = value
        model = _build_model(args.model_type, rendered, args.seed)
        if args.model_type in ("nn_avg", "nn_sum"):
            model.fit(X, y, X_val, y_val)
        else:
            model.fit(X, y)
        preds = model.predict(X_val)
        return float(np.mean(preds != y_val))

    space = _parse_space(args.grid, args.range)
    if args.method == "grid":
        result = tuning.grid_search(objective, space)
    else:
        result = tuning.bayes_opt(
            objective, space, n_iter=args.n_iter, n_init=args.n_init,
            seed=args.seed,
        )
    print(f"best_error {result.best_error!r}")
    for key, value in result.best_params.items():
        print(f"best_{key} {value!r}")
    if args.log_out:
        tuning.write_tuning_log(result, args.log_out)
    return 0


def cmd_synth(args):
    spec = SynthSpec(
        n_docs=args.n_docs,
        separation=args.separation,
        prevalence=args.prevalence,
        vocab_size=args.vocab_size,
        length_median=args.length_median,
        length_sigma=args.length_sigma,
        zipf_exponent=args.zipf_exponent,
        seed=args.seed,
    )
    if args.target_accuracy is not None:
        sep = separation_for_accuracy(args.target_accuracy, spec)
        from dataclasses import replace

        spec = replace(spec, separation=sep)
        log.info("separation %.6f gives optimal accuracy %.4f", sep,
                 args.target_accuracy)
    textprep.write_corpus(synth_corpus(spec), args.out)
    log.info("wrote %d synthetic documents -> %s", args.n_docs, args.out)
    return 0


def cmd_experiment(args):
    config = harness.read_config(_require_file(args.config))
    out_dir = _default_out_dir(args.out_dir or config.output_dir)
    result, comparisons = reporting.run_config(config)
    paths = reporting.report(
        result, out_dir, comparisons, render_figures=not args.no_figures
    )
    for path in paths:
        log.info("wrote %s", path)
    if result.failures:
        for name, message in result.failures.items():
            log.error("model %s failed: %s", name, message)
        return 2
    return 0


def cmd_compare(args):
    result = reporting.read_results_csv(_require_file(args.results))
    table = harness.compare_models(result, args.metric)
    reporting.write_comparison_csv([table], args.out)
    log.info("wrote %s (referent %s)", args.out, table.referent)
    return 0


def cmd_report(args):
    result = reporting.read_results_csv(_require_file(args.results))
    out_dir = _default_out_dir(args.out_dir)
    paths = reporting.report(
        result, out_dir, render_figures=not args.no_figures
    )
    for path in paths:
        log.info("wrote %s", path)
    return 0


# ---------------------------------------------------------------------------
# parser wiring
# ---------------------------------------------------------------------------

def build_parser():
    parser = _Parser(
        prog="survbench",
        description="Benchmark document classifiers with "
        "prevalence-oriented evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="tokenize a corpus")
    p.add_argument("--corpus", required=True, help="JSONL corpus path")
    p.add_argument("--stopwords", help="custom stopword list (one per line)")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("dtm", help="build a document-term matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ngrams", type=int, choices=(1, 2), default=2)
    p.add_argument("--weighting", choices=("count", "binary", "tfidf"),
                   default="count")
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--stopwords")
    p.add_argument("--vocab-in", help="reuse a saved vocabulary")
    p.add_argument("--vocab-out", help="save the vocabulary")
    p.add_argument("--labels-out", help="write the companion label file")
    p.add_argument("--out", required=True, help="DTM output path")
    p.set_defaults(func=cmd_dtm)

    p = sub.add_parser("train", help="fit a model on a DTM")
    p.add_argument("--model-type", required=True, choices=MODEL_TYPES)
    p.add_argument("--dtm", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--val-dtm")
    p.add_argument("--val-labels")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="hyperparameter override (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history-out",
                   help="loss-history CSV (neural models)")
    p.add_argument("--out", required=True, help="model output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score documents with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--dtm", required=True)
    p.add_argument("--threshold", type=float,
                   help="override the model's classification threshold")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("tune", help="hyperparameter search")
    p.add_argument("--method", required=True,
                   choices=("grid", "bayes", "rfe", "nrfe", "threshold"))
    p.add_argument("--model-type", choices=MODEL_TYPES, default="svm")
    p.add_argument("--corpus",
                   help="labeled corpus; tune makes its own split")
    p.add_argument("--split-seed", type=int, default=0,
                   help="seed for the dedicated tuning split (keep it "
                   "out of the experiment seed list)")
    p.add_argument("--val-frac", type=float, default=0.2)
    p.add_argument("--dtm")
    p.add_argument("--labels")
    p.add_argument("--val-dtm")
    p.add_argument("--val-labels")
    p.add_argument("--grid", action="append", metavar="NAME=V1,V2,...")
    p.add_argument("--range", action="append", metavar="NAME=LO:HI")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="fixed hyperparameter (repeatable)")
    p.add_argument("--n-iter", type=int, default=30)
    p.add_argument("--n-init", type=int, default=5)
    p.add_argument("--start", type=int, default=250,
                   help="initial importance trim size (rfe/nrfe)")
    p.add_argument("--candidates", metavar="LO:HI:STEP",
                   help="candidate sizes (rfe/nrfe), default 10:200:10")
    p.add_argument("--features-out", help="write retained feature ids")
    p.add_argument("--model", help="saved model (threshold method)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-out", help="tuning log CSV path")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--n-docs", type=int, required=True)
    p.add_argument("--separation", type=float, default=0.25)
    p.add_argument("--target-accuracy", type=float,
                   help="solve for the separation hitting this optimal "
                   "accuracy")
    p.add_argument("--prevalence", type=float, default=0.489)
    p.add_argument("--vocab-size", type=int, default=128)
    p.add_argument("--length-median", type=float,
                   default=SynthSpec.length_median)
    p.add_argument("--length-sigma", type=float,
                   default=SynthSpec.length_sigma)
    p.add_argument("--zipf-exponent", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", help="override the config output directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", help="referent comparison from results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--metric", choices=("accuracy", "diff_pos"),
                   default="accuracy")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render tables and figures from "
                       "results.csv")
    p.add_argument("--results", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(message)s"
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
