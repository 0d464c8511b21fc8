"""Rendering of experiment results: per-split and summary CSVs, the two
aligned-text summary tables, referent-comparison CSV, and figures.

Wall times are logged, never written into the data outputs, so a rerun
with the same config byte-reproduces every file this module emits.
"""

from __future__ import annotations

import csv
import logging
import os

from . import figures
from .harness import CellResult, ExperimentResult, compare_models, \
    run_experiment
from .stats import Confusion, MetricRow

log = logging.getLogger("survbench")

_METRIC_COLUMNS = ("sens", "spec", "ppv", "npv", "f1", "acc")
_COUNT_COLUMNS = ("n_pos", "diff_pos")


def _fmt(value):
    return "" if value is None else repr(float(value))


def write_results_csv(result, path):
    """One row per (model, split)."""
    header = (
        ["model", "seed", "tp", "fp", "tn", "fn"]
        + list(_METRIC_COLUMNS)
        + list(_COUNT_COLUMNS)
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for name in result.succeeded():
            for seed in result.seeds:
                cell = result.cells[(name, seed)]
                c, m = cell.confusion, cell.metrics
                row = [name, str(seed), str(c.tp), str(c.fp), str(c.tn),
                       str(c.fn)]
                row += [_fmt(getattr(m, col)) for col in _METRIC_COLUMNS]
                row += [str(m.n_pos), str(m.diff_pos)]
                f.write(",".join(row) + "\n")


def write_summary_csv(result, path):
    """One row per model: metric means plus a status column."""
    header = (
        ["model"]
        + list(_METRIC_COLUMNS)
        + list(_COUNT_COLUMNS)
        + ["fp", "fn", "status"]
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for name in result.model_names:
            if name in result.failures:
                row = [name] + [""] * (len(header) - 2)
                row.append("failed: " + result.failures[name])
            else:
                means = result.mean_metrics(name)
                row = [name]
                row += [_fmt(means[col]) for col in _METRIC_COLUMNS]
                row += [_fmt(means[col]) for col in _COUNT_COLUMNS]
                row += [_fmt(means["fp"]), _fmt(means["fn"]), "ok"]
            f.write(",".join(row) + "\n")


def write_comparison_csv(tables, path):
    """Comparison rows for each metric's referent table."""
    header = ["metric", "model", "mean", "referent", "p_raw", "p_adj",
              "one_sample_diff_pos_p"]
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(header) + "\n")
        for table in tables:
            for row in table.rows:
                f.write(
                    ",".join(
                        [
                            table.metric,
                            row.model,
                            repr(float(row.mean_value)),
                            "1" if row.model == table.referent else "0",
                            _fmt(row.p_raw),
                            _fmt(row.p_adj),
                            _fmt(table.one_sample_diff_pos.get(row.model)),
                        ]
                    )
                    + "\n"
                )


def read_results_csv(path):
    """Rebuild an ExperimentResult from a results.csv (wall times 0)."""
    cells = {}
    model_names, seeds = [], []
    with open(path, encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            name, seed = row["model"], int(row["seed"])
            if name not in model_names:
                model_names.append(name)
            if seed not in seeds:
                seeds.append(seed)
            conf = Confusion(
                tp=int(row["tp"]), fp=int(row["fp"]), tn=int(row["tn"]),
                fn=int(row["fn"]),
            )
            metric_row = MetricRow(
                **{
                    col: (float(row[col]) if row[col] != "" else None)
                    for col in _METRIC_COLUMNS
                },
                n_pos=int(row["n_pos"]),
                diff_pos=int(row["diff_pos"]),
            )
            cells[(name, seed)] = CellResult(
                metrics=metric_row, confusion=conf, wall_time=0.0
            )
    for name in model_names:
        for seed in seeds:
            if (name, seed) not in cells:
                raise ValueError(
                    f"{path}: missing row for model {name!r} seed {seed}"
                )
    return ExperimentResult(
        model_names=model_names, seeds=seeds, cells=cells
    )


def _pct(value):
    return "    -" if value is None else f"{value:6.2f}"


def render_accuracy_table(result, comparison=None):
    """Aligned text in the performance-table layout:
    Model | Sens Spec PPV NPV F1 Acc | Acc p (adj), referent starred."""
    lines = []
    width = max([len("Model")] + [len(n) for n in result.model_names])
    header = (
        f"{'Model':<{width}}   Sens   Spec    PPV    NPV     F1    Acc"
        "  Acc p (adj)"
    )
    lines.append(header)
    adj = {}
    referent = None
    if comparison is not None:
        referent = comparison.referent
        adj = {r.model: r.p_adj for r in comparison.rows}
    for name in result.succeeded():
        means = result.mean_metrics(name)
        cells = " ".join(_pct(means[c]) for c in _METRIC_COLUMNS)
        if name == referent:
            p_cell = "*"
        elif name in adj and adj[name] is not None:
            p_cell = f"{adj[name]:.3f}"
        else:
            p_cell = "-"
        lines.append(f"{name:<{width}} {cells}  {p_cell}")
    return "\n".join(lines) + "\n"


def render_prevalence_table(result, comparison=None):
    """Aligned text in the prevalence-table layout:
    Model | FP FN n pos Diff pos | p | Pair. p, referent starred."""
    lines = []
    width = max([len("Model")] + [len(n) for n in result.model_names])
    lines.append(
        f"{'Model':<{width}}     FP     FN  n pos  Diff pos      p  Pair. p"
    )
    adj = {}
    one_sample = {}
    referent = None
    if comparison is not None:
        referent = comparison.referent
        adj = {r.model: r.p_adj for r in comparison.rows}
        one_sample = comparison.one_sample_diff_pos
    for name in result.succeeded():
        means = result.mean_metrics(name)
        p1 = one_sample.get(name)
        p1_cell = "     -" if p1 is None else f"{p1:6.3f}"
        if name == referent:
            pair_cell = "*"
        elif name in adj and adj[name] is not None:
            pair_cell = f"{adj[name]:.3f}"
        else:
            pair_cell = "-"
        lines.append(
            f"{name:<{width}} {means['fp']:6.0f} {means['fn']:6.0f} "
            f"{means['n_pos']:6.0f} {means['diff_pos']:9.0f} {p1_cell}"
            f"  {pair_cell}"
        )
    return "\n".join(lines) + "\n"


def report(result, out_dir, comparisons=None, render_figures=True):
    """Write every output for an experiment into out_dir.

    comparisons defaults to the accuracy and diff_pos referent tables
    (computed here when at least two models succeeded). Returns the list
    of written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    if comparisons is None:
        comparisons = []
        if len(result.succeeded()) >= 2 and len(result.seeds) >= 2:
            comparisons = [
                compare_models(result, "accuracy"),
                compare_models(result, "diff_pos"),
            ]
    by_metric = {t.metric: t for t in comparisons}
    paths = []

    def out(name):
        paths.append(os.path.join(out_dir, name))
        return paths[-1]

    write_results_csv(result, out("results.csv"))
    write_summary_csv(result, out("summary.csv"))
    write_comparison_csv(comparisons, out("comparison.csv"))
    with open(out("table_accuracy.txt"), "w", encoding="utf-8") as f:
        f.write(render_accuracy_table(result, by_metric.get("accuracy")))
    with open(out("table_prevalence.txt"), "w", encoding="utf-8") as f:
        f.write(render_prevalence_table(result, by_metric.get("diff_pos")))
    if render_figures and result.succeeded():
        paths.extend(figures.render_result_figures(result, out_dir))
    return paths


def run_config(config, stopwords=None):
    """Run the experiment a config describes; returns (result, tables)."""
    corpus = config.load_corpus()
    if stopwords is None and config.stopwords_path:
        from .textprep import load_stopwords

        stopwords = load_stopwords(config.stopwords_path)
    result = run_experiment(
        corpus, config.specs, config.plan, stratify=config.stratify,
        stopwords=stopwords,
    )
    comparisons = []
    if len(result.succeeded()) >= 2 and len(result.seeds) >= 2:
        comparisons = [
            compare_models(result, "accuracy"),
            compare_models(result, "diff_pos"),
        ]
    return result, comparisons
