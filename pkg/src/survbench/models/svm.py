"""Linear classifier minimizing the primal L2-regularized squared-hinge
objective

    f(w, b) = 0.5 ||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))^2

with a deterministic Newton-CG solver (generalized Hessian, Armijo line
search). The contract is stated in objective values: training stops when
the relative objective decrease falls below `tol` or the iteration cap
is hit, and the recorded objective history is nonincreasing.
"""

from __future__ import annotations

import numpy as np

from ..linalg import spmv, spmtv
from .base import ThresholdMixin, check_binary_labels, load_container, \
    save_container

_ARMIJO = 1e-4
_CG_DAMPING = 1e-12


def _n_rows(X):
    return X.shape[0]


def _objective(X, ypm, c, w, b):
    z = spmv(X, w) + b
    h = np.maximum(0.0, 1.0 - ypm * z)
    return 0.5 * float(w @ w) + c * float(h @ h), h


class LinearSvm(ThresholdMixin):
    """Squared-hinge, L2-penalized linear SVM.

    score() returns the signed margin w.x + b; predict thresholds it at
    0 by default.
    """

    model_type = "svm"
    threshold = 0.0

    def __init__(self, c=1.0, fit_intercept=True, tol=1e-8, max_iter=100):
        if c <= 0:
            raise ValueError("C must be positive")
        self.c = float(c)
        self.fit_intercept = bool(fit_intercept)
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.weights = None
        self.bias = 0.0
        self.objective_history = None

    def fit(self, X, y, X_val=None, y_val=None):
        y = check_binary_labels(y, _n_rows(X))
        ypm = 2.0 * y - 1.0
        n, n_features = X.shape
        c = self.c
        w = np.zeros(n_features)
        b = 0.0
        f, h = _objective(X, ypm, c, w, b)
        history = [f]
        for _ in range(self.max_iter):
            coef = -2.0 * c * ypm * h
            g_w = w + spmtv(X, coef)
            g_b = float(coef.sum()) if self.fit_intercept else 0.0
            grad_norm2 = float(g_w @ g_w) + g_b * g_b
            if grad_norm2 <= 1e-24:
                break
            active = (h > 0).astype(np.float64)

            def hessp(v_w, v_b):
                t = 2.0 * c * active * (spmv(X, v_w) + v_b)
                hv_w = v_w + spmtv(X, t) + _CG_DAMPING * v_w
                hv_b = float(t.sum()) if self.fit_intercept else 0.0
                return hv_w, hv_b

            d_w, d_b = _cg(hessp, -g_w, -g_b, self.fit_intercept)
            descent = float(g_w @ d_w) + g_b * d_b
            if descent >= 0:  # fall back to steepest descent
                d_w, d_b = -g_w, -g_b
                descent = -grad_norm2
            step = 1.0
            accepted = False
            while step >= 1e-14:
                f_new, h_new = _objective(
                    X, ypm, c, w + step * d_w, b + step * d_b
                )
                if f_new <= f + _ARMIJO * step * descent:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            w = w + step * d_w
            b = b + step * d_b
            f_prev, f = f, f_new
            h = h_new
            history.append(f)
            if f_prev - f < self.tol * max(1.0, abs(f_prev)):
                break
        self.weights = w
        self.bias = b if self.fit_intercept else 0.0
        self.objective_history = np.asarray(history)
        return self

    def score(self, X):
        if self.weights is None:
            raise RuntimeError("model is not fitted")
        return spmv(X, self.weights) + self.bias

    def save(self, path):
        save_container(
            path,
            self.model_type,
            {
                "weights": self.weights,
                "objective_history": self.objective_history,
            },
            {
                "c": self.c,
                "bias": self.bias,
                "fit_intercept": self.fit_intercept,
                "tol": self.tol,
                "max_iter": self.max_iter,
            },
        )

    @classmethod
    def load(cls, path):
        model_type, arrays, meta = load_container(path)
        if model_type != cls.model_type:
            raise ValueError(f"expected a {cls.model_type} archive")
        model = cls(
            c=meta["c"],
            fit_intercept=meta["fit_intercept"],
            tol=meta["tol"],
            max_iter=meta["max_iter"],
        )
        model.weights = arrays["weights"]
        model.bias = meta["bias"]
        model.objective_history = arrays["objective_history"]
        return model


def _cg(hessp, r_w0, r_b0, use_bias, max_iter=250, tol=1e-10):
    """Conjugate gradient for H d = rhs, starting from d = 0."""
    d_w = np.zeros_like(r_w0)
    d_b = 0.0
    r_w, r_b = r_w0.copy(), r_b0
    p_w, p_b = r_w.copy(), r_b
    rs = float(r_w @ r_w) + r_b * r_b
    rs0 = rs
    for _ in range(max_iter):
        if rs <= tol * max(rs0, 1e-300):
            break
        hp_w, hp_b = hessp(p_w, p_b)
        denom = float(p_w @ hp_w) + p_b * hp_b
        if denom <= 0:
            break
        alpha = rs / denom
        d_w += alpha * p_w
        d_b += alpha * p_b
        r_w -= alpha * hp_w
        r_b -= alpha * hp_b
        rs_new = float(r_w @ r_w) + r_b * r_b
        beta = rs_new / rs
        p_w = r_w + beta * p_w
        p_b = r_b + beta * p_b
        rs = rs_new
    if not use_bias:
        d_b = 0.0
    return d_w, d_b
