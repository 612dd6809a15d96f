"""Rank correlation, OLS variance explained, and Gaussian total correlation."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.stats import rankdata

from ..errors import ArgumentError, DegenerateError


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ArgumentError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ArgumentError("need at least 2 paired observations")
    rx = rankdata(x) - (x.size + 1) / 2.0
    ry = rankdata(y) - (y.size + 1) / 2.0
    denom = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denom == 0.0:
        raise DegenerateError("rank correlation undefined for a constant input")
    return float(np.clip(np.sum(rx * ry) / denom, -1.0, 1.0))


def one_hot_design(predictors) -> np.ndarray:
    """Indicator columns for every level of the cartesian product of ``predictors``."""
    cols = [np.asarray(p).ravel() for p in predictors]
    if not cols:
        raise ArgumentError("need at least one predictor column")
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise ArgumentError("predictor columns differ in length")
    keys = [tuple(c[i] for c in cols) for i in range(n)]
    levels = {k: j for j, k in enumerate(sorted(set(keys), key=repr))}
    X = np.zeros((n, len(levels)))
    X[np.arange(n), [levels[k] for k in keys]] = 1.0
    return X


def ols_r2(categorical_predictors, y) -> float:
    """Coefficient of determination of a least-squares fit on one-hot groups.

    With several predictor columns the groups are their cartesian product.
    The design carries an intercept; rank deficiency is resolved by the
    minimum-norm solution.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    dummies = one_hot_design(categorical_predictors)
    if dummies.shape[0] != y.size:
        raise ArgumentError("predictors and response differ in length")
    X = np.concatenate([np.ones((y.size, 1)), dummies], axis=1)
    if y.size <= dummies.shape[1]:
        raise ArgumentError(
            f"need more rows ({y.size}) than dummy columns ({dummies.shape[1]})")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    return float(np.clip(1.0 - np.sum(resid ** 2) / ss_tot, 0.0, 1.0))


@dataclass(frozen=True)
class GaussianFit:
    mean: np.ndarray
    cov: np.ndarray


def fit_gaussian(codes) -> GaussianFit:
    """Empirical mean and biased (1/N) covariance."""
    x = np.asarray(getattr(codes, "values", codes), dtype=np.float64)
    if x.ndim != 2 or x.shape[1] == 0:
        raise ArgumentError("need an N x d matrix with d >= 1")
    mu = x.mean(axis=0)
    xc = x - mu
    cov = xc.T @ xc / x.shape[0]
    return GaussianFit(mu, 0.5 * (cov + cov.T))


def gaussian_tc(fit: GaussianFit, jitter: float = 1e-8) -> float:
    """Total correlation ``1/2 (sum_j ln S_jj - ln det S)`` of a Gaussian, in nats.

    If the Cholesky factorization fails, ``jitter * trace(S) / d`` is added to
    the diagonal (once to both terms) before retrying.
    """
    cov = np.asarray(fit.cov, dtype=np.float64)
    d = cov.shape[0]
    if d == 0:
        raise ArgumentError("total correlation of a 0-dimensional Gaussian")
    diag = np.diag(cov).copy()
    # constant dimensions carry no dependence; drop them
    keep = diag > 0
    if keep.sum() <= 1:
        return 0.0
    cov = cov[np.ix_(keep, keep)]
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eps = jitter * np.trace(cov) / cov.shape[0]
        cov = cov + eps * np.eye(cov.shape[0])
        chol = np.linalg.cholesky(cov)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    tc = 0.5 * (np.sum(np.log(np.diag(cov))) - logdet)
    return float(max(tc, 0.0))
