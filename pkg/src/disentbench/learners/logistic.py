"""Multinomial logistic regression, plain and cross-validated."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from ..errors import DataError, DegenerateLabelError
from .base import ClassifierModel, ConstantModel, encode_labels


@dataclass(frozen=True)
class LogisticConfig:
    l2_strength: float = 1.0  # inverse of sklearn's C
    max_iter: int = 100
    tol: float = 1e-4


class LogisticModel(ClassifierModel):
    kind = "logistic"

    def __init__(self, classes, coef, intercept, l2_strength):
        self.classes = classes
        self.coef = coef
        self.intercept = intercept
        self.l2_strength = l2_strength

    def decision_function(self, X):
        return X @ self.coef + self.intercept


def _loss_grad(theta, X, Y, l2):
    # per-sample average, so the gradient tolerance does not scale with N
    n, d = X.shape
    c = Y.shape[1]
    W = theta[: d * c].reshape(d, c)
    b = theta[d * c:]
    z = X @ W + b
    lse = logsumexp(z, axis=1, keepdims=True)
    loss = (float(np.sum(lse) - np.sum(z * Y)) + 0.5 * l2 * float(np.sum(W * W))) / n
    P = np.exp(z - lse) - Y
    gW = (X.T @ P + l2 * W) / n
    gb = P.sum(axis=0) / n
    return loss, np.concatenate([gW.ravel(), gb])


def fit_logistic(X, y, config: LogisticConfig = LogisticConfig(),
                 init: np.ndarray | None = None) -> LogisticModel:
    """L2-penalized multinomial logistic regression (intercept unpenalized).

    Minimizes the summed cross-entropy plus ``l2_strength / 2 * ||W||^2``
    (divided by N) with L-BFGS until the projected gradient falls below
    ``tol`` or ``max_iter`` iterations.  Defaults follow scikit-learn's.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if not np.all(np.isfinite(X)):
        raise DataError("features contain non-finite values")
    classes, yi = encode_labels(y)
    n, d = X.shape
    c = classes.size
    Y = np.zeros((n, c))
    Y[np.arange(n), yi] = 1.0
    x0 = np.zeros(d * c + c) if init is None or init.size != d * c + c else init
    res = optimize.minimize(
        _loss_grad, x0, args=(X, Y, config.l2_strength), jac=True,
        method="L-BFGS-B", options={"maxiter": config.max_iter, "gtol": config.tol})
    theta = res.x
    return LogisticModel(classes, theta[: d * c].reshape(d, c), theta[d * c:],
                         config.l2_strength)


def fit_or_constant(fit, X, y, **kw) -> ClassifierModel:
    """Fit, or fall back to the only label present in ``y``."""
    try:
        return fit(X, y, **kw)
    except DegenerateLabelError:
        return ConstantModel(np.asarray(y).ravel()[0])


def stratified_folds(y: np.ndarray, folds: int) -> np.ndarray:
    """Fold id per row; each class is dealt round-robin in row order."""
    fold = np.empty(y.size, dtype=np.int64)
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        fold[idx] = np.arange(idx.size) % folds
    return fold


def make_folds(y, folds: int = 5) -> tuple[np.ndarray, int]:
    """Stratified folds when every class has ``folds`` members.

    Otherwise the fold count drops to the smallest class count (if >= 2),
    and below that the split is an unstratified contiguous one.
    """
    y = np.asarray(y).ravel()
    n = y.size
    _, counts = np.unique(y, return_counts=True)
    smallest = int(counts.min())
    if smallest >= folds:
        return stratified_folds(y, folds), folds
    if smallest >= 2:
        return stratified_folds(y, smallest), smallest
    k = min(folds, n)
    return (np.arange(n) * k) // n, k


def fit_logistic_cv(X, y, folds: int = 5, n_strengths: int = 10,
                    max_iter: int = 100, tol: float = 1e-4) -> ClassifierModel:
    """Select the L2 strength by k-fold validation accuracy and refit on all rows.

    Candidate inverse strengths (sklearn's ``Cs``) are log-spaced on
    ``[1e-4, 1e4]``; within a fold each fit warm-starts from the previous,
    more regularized one.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y).ravel()
    if y.size < 2:
        raise DataError(f"need at least 2 rows, got {y.size}")
    encode_labels(y)
    fold, k = make_folds(y, folds)
    cs = np.logspace(-4, 4, n_strengths)
    acc = np.full((k, cs.size), np.nan)
    for f in range(k):
        tr = fold != f
        te = ~tr
        if not te.any() or not tr.any():
            continue
        theta = None
        for s, c in enumerate(cs):
            cfg = LogisticConfig(1.0 / c, max_iter, tol)
            m = fit_or_constant(fit_logistic, X[tr], y[tr], config=cfg, init=theta)
            if isinstance(m, LogisticModel):
                theta = np.concatenate([m.coef.ravel(), m.intercept])
            acc[f, s] = m.score(X[te], y[te])
    valid = ~np.isnan(acc).all(axis=1)
    mean_acc = acc[valid].mean(axis=0) if valid.any() else np.zeros(cs.size)
    best = int(np.argmax(mean_acc))
    model = fit_logistic(X, y, LogisticConfig(1.0 / cs[best], max_iter, tol))
    model.cv_accuracy = mean_acc
    return model
