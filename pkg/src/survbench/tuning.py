"""Hyperparameter search: exhaustive grid search, recursive and
one-shot feature elimination for the random forest, Gaussian-process
Bayesian optimization with expected improvement, and the
classification-threshold sweep."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import ndtr

__all__ = [
    "SearchSpace",
    "TuneResult",
    "grid_search",
    "feature_eliminate",
    "bayes_opt",
    "threshold_sweep",
    "write_tuning_log",
]


@dataclass
class SearchSpace:
    """Per-parameter domains: a finite list of values or ("continuous",
    lo, hi). Parameter order is significant (it fixes evaluation and
    normalization order)."""

    params: dict

    def __post_init__(self):
        for name, domain in self.params.items():
            if isinstance(domain, tuple) and domain[0] == "continuous":
                _, lo, hi = domain
                if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                    raise ValueError(f"bad interval for {name!r}")
            else:
                if len(domain) == 0:
                    raise ValueError(f"empty domain for {name!r}")

    @property
    def names(self):
        return list(self.params)

    def is_continuous(self, name):
        d = self.params[name]
        return isinstance(d, tuple) and d[0] == "continuous"


@dataclass
class TuneResult:
    best_params: dict
    best_error: float
    log: list = field(default_factory=list)  # (params, error) in eval order


def grid_search(objective, space):
    """Evaluate the full Cartesian product in lexicographic order.

    A failing objective records +inf for that point and the search
    continues. Ties keep the first-evaluated point.
    """
    names = space.names
    domains = []
    for name in names:
        if space.is_continuous(name):
            raise ValueError(f"grid_search requires finite domains ({name})")
        domains.append(list(space.params[name]))
    log = []
    best_params, best_error = None, math.inf
    for combo in itertools.product(*domains):
        params = dict(zip(names, combo))
        try:
            error = float(objective(params))
        except Exception:
            error = math.inf
        log.append((params, error))
        if error < best_error or best_params is None:
            best_params, best_error = params, error
    return TuneResult(best_params=best_params, best_error=best_error, log=log)


def threshold_sweep(scores, labels):
    """Accuracy-maximizing cutoff over 0.01..0.99 in steps of 0.01.

    Classification is score >= cutoff; ties among optimal cutoffs break
    toward 0.5, then toward the smaller value.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size and (scores.min() < 0 or scores.max() > 1):
        raise ValueError("scores must lie in [0, 1]")
    cutoffs = np.round(np.arange(1, 100) * 0.01, 2)
    best_cut, best_acc = None, -1.0
    for cut in cutoffs:
        acc = float(np.mean((scores >= cut).astype(np.int64) == labels))
        better = acc > best_acc
        if not better and acc == best_acc:
            better = abs(cut - 0.5) < abs(best_cut - 0.5)
        if better:
            best_cut, best_acc = float(cut), acc
    return best_cut


def feature_eliminate(train_model, X, y, X_val, y_val, mode,
                      select_features, start=250, candidates=None):
    """Pick the feature-subset size maximizing validation accuracy.

    train_model(X_sub, y) must return a fitted model exposing
    feature_importances() and predict(X_sub_val). select_features(M,
    ids) restricts a matrix to the given columns. An initial fit on the
    full data trims to the `start` most important features; recursive
    mode then refits and re-ranks while stepping down in increments of
    10, while nonrecursive mode keeps the initial ranking and truncates.
    Candidate sizes default to 10..200 in steps of 10; ties prefer the
    smaller size. Returns (n_top, retained feature ids).
    """
    if mode not in ("recursive", "nonrecursive"):
        raise ValueError(f"unknown mode {mode!r}")
    if candidates is None:
        candidates = list(range(10, 201, 10))
    candidates = sorted(set(int(c) for c in candidates))
    n_features = X.shape[1]
    if n_features < candidates[0]:
        raise ValueError(
            f"only {n_features} features available; need at least "
            f"{candidates[0]}"
        )
    candidates = [c for c in candidates if c <= min(start, n_features)]

    def rank_features(model, feature_ids):
        imp = model.feature_importances()
        # stable: importance descending, feature id ascending on ties
        order = np.lexsort((feature_ids, -imp))
        return feature_ids[order]

    initial = train_model(X, y)
    all_ids = np.arange(n_features)
    ranked = rank_features(initial, all_ids)
    current_ids = np.sort(ranked[: min(start, n_features)])
    ranked_current = ranked[: min(start, n_features)]

    def evaluate(ids):
        ids = np.sort(ids)
        model = train_model(select_features(X, ids), y)
        preds = model.predict(select_features(X_val, ids))
        return float(np.mean(preds == np.asarray(y_val))), model, ids

    best = None  # (acc, n_top, ids)
    if mode == "nonrecursive":
        for size in candidates:
            acc, _, ids = evaluate(ranked_current[:size])
            if best is None or acc > best[0] or (
                acc == best[0] and size < best[1]
            ):
                best = (acc, size, ids)
    else:
        size = len(current_ids)
        ids = current_ids
        while size >= candidates[0]:
            acc, model, ids = evaluate(ids)
            if size in candidates:
                if best is None or acc > best[0] or (
                    acc == best[0] and size < best[1]
                ):
                    best = (acc, size, ids)
            next_size = size - 10
            if next_size < candidates[0]:
                break
            ranked_now = rank_features(model, ids)
            ids = ranked_now[:next_size]
            size = next_size
    return best[1], best[2]


# ---------------------------------------------------------------------------
# Gaussian-process Bayesian optimization
# ---------------------------------------------------------------------------

def _matern52(dist2, length_scale):
    d = np.sqrt(np.maximum(dist2, 0.0)) * (math.sqrt(5.0) / length_scale)
    return (1.0 + d + d * d / 3.0) * np.exp(-d)


_GP_NOISE = 1e-6  # relative observation noise on the correlation diagonal
_LENGTH_GRID = np.exp(np.linspace(math.log(0.03), math.log(3.0), 24))


class _Gp:
    """Zero-mean GP with a Matern-5/2 kernel on [0,1]^d inputs.

    The kernel variance is profiled out in closed form, and the single
    isotropic length-scale is refit by maximum likelihood over a fixed
    log-spaced grid, which keeps the fit deterministic.
    """

    def __init__(self, X, y):
        self.X = X
        y = np.asarray(y, dtype=np.float64)
        self.y_mean = float(y.mean())
        y_std = float(y.std())
        self.y_std = y_std if y_std > 0 else 1.0
        self.y = (y - self.y_mean) / self.y_std
        n = X.shape[0]
        d2 = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=-1)
        best = None
        for ls in _LENGTH_GRID:
            R = _matern52(d2, ls) + _GP_NOISE * np.eye(n)
            try:
                L = np.linalg.cholesky(R)
            except np.linalg.LinAlgError:
                continue
            z = _solve_lower(L, self.y)
            sigma2 = max(float(z @ z) / n, 1e-12)
            logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
            lml = -0.5 * n * math.log(sigma2) - 0.5 * logdet
            if best is None or lml > best[0]:
                best = (lml, ls, L, sigma2)
        if best is None:
            raise RuntimeError("GP kernel matrix is not positive definite")
        _, self.length_scale, self.L, self.sigma2 = best
        self.alpha = _solve_upper(self.L.T, _solve_lower(self.L, self.y))

    def predict(self, Xq):
        d2 = np.sum((Xq[:, None, :] - self.X[None, :, :]) ** 2, axis=-1)
        k = _matern52(d2, self.length_scale)
        mu = k @ self.alpha
        v = _solve_lower(self.L, k.T)
        var = np.maximum(1.0 - np.sum(v * v, axis=0), 1e-12) * self.sigma2
        return mu, np.sqrt(var)

    def expected_improvement(self, Xq):
        mu, sd = self.predict(Xq)
        f_best = float(self.y.min())
        gap = f_best - mu
        z = gap / sd
        pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        return gap * ndtr(z) + sd * pdf


def _solve_lower(L, b):
    return solve_triangular(L, b, lower=True)


def _solve_upper(U, b):
    return solve_triangular(U, b, lower=False)


def _to_unit(space, params):
    x = np.empty(len(space.names))
    for i, name in enumerate(space.names):
        if space.is_continuous(name):
            _, lo, hi = space.params[name]
            x[i] = (params[name] - lo) / (hi - lo)
        else:
            values = np.asarray(space.params[name], dtype=np.float64)
            lo, hi = values.min(), values.max()
            x[i] = 0.5 if hi == lo else (params[name] - lo) / (hi - lo)
    return x


def _from_unit(space, x):
    params = {}
    for i, name in enumerate(space.names):
        if space.is_continuous(name):
            _, lo, hi = space.params[name]
            params[name] = lo + float(np.clip(x[i], 0, 1)) * (hi - lo)
        else:
            values = np.asarray(space.params[name], dtype=np.float64)
            lo, hi = values.min(), values.max()
            raw = lo if hi == lo else lo + float(np.clip(x[i], 0, 1)) * (
                hi - lo
            )
            # round to the nearest member; first index wins ties
            j = int(np.argmin(np.abs(values - raw)))
            member = space.params[name][j]
            params[name] = member
    return params


def _pattern_search(f, x0, n_steps=40):
    """Deterministic compass search maximizing f over [0,1]^d."""
    x = np.clip(np.asarray(x0, dtype=np.float64), 0, 1)
    fx = f(x)
    step = 0.25
    d = x.size
    for _ in range(n_steps):
        improved = False
        for j in range(d):
            for sign in (1.0, -1.0):
                cand = x.copy()
                cand[j] = np.clip(cand[j] + sign * step, 0.0, 1.0)
                fc = f(cand)
                if fc > fx:
                    x, fx = cand, fc
                    improved = True
        if not improved:
            step *= 0.5
            if step < 1e-4:
                break
    return x, fx


def bayes_opt(objective, space, n_iter, n_init=5, seed=0):
    """GP-based minimization with expected improvement.

    Inputs are normalized to [0,1]^d; finite domains are handled by
    rounding the acquisition optimum to the nearest member. Runs n_init
    seeded uniform points then n_iter GP-guided evaluations (total
    n_init + n_iter objective calls). A failing objective is recorded as
    the worst error observed so far plus one. Deterministic for a fixed
    seed.
    """
    if n_init < 1:
        raise ValueError("n_init must be >= 1")
    rng = np.random.default_rng(seed)
    names = space.names
    log = []
    X_obs, y_obs = [], []

    def run_point(params):
        try:
            error = float(objective(params))
            if not np.isfinite(error):
                raise ValueError("non-finite objective")
        except Exception:
            worst = max((e for _, e in log), default=0.0)
            error = worst + 1.0
        log.append((params, error))
        X_obs.append(_to_unit(space, params))
        y_obs.append(error)

    for _ in range(n_init):
        run_point(_from_unit(space, rng.random(len(names))))
    for _ in range(n_iter):
        gp = _Gp(np.asarray(X_obs), np.asarray(y_obs))

        def ei(x):
            return float(gp.expected_improvement(x[None, :])[0])

        starts = [np.asarray(X_obs)[int(np.argmin(y_obs))]]
        starts.extend(rng.random(len(names)) for _ in range(9))
        best_x, best_ei = None, -np.inf
        for s in starts:
            x, v = _pattern_search(ei, s)
            if v > best_ei:
                best_x, best_ei = x, v
        run_point(_from_unit(space, best_x))
    i_best = int(np.argmin(y_obs))
    return TuneResult(
        best_params=log[i_best][0], best_error=float(y_obs[i_best]), log=log
    )


def write_tuning_log(result, path):
    """CSV export: iteration, each parameter, validation error."""
    names = list(result.log[0][0]) if result.log else []
    with open(path, "w", encoding="utf-8") as f:
        f.write(",".join(["iteration"] + names + ["error"]) + "\n")
        for i, (params, error) in enumerate(result.log):
            row = [str(i)] + [repr(params[n]) for n in names] + [repr(error)]
            f.write(",".join(row) + "\n")
