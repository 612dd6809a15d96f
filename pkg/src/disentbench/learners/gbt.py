"""Gradient boosted regression trees on the logistic loss.

Multiclass problems are handled one-vs-rest: each class gets its own binary
booster and prediction takes the largest raw score.  Trees are grown
level-wise with exact greedy splits over pre-sorted features.  Feature
importance is the total squared-error reduction credited to each feature
over all trees; when several features tie for the best split of a node the
reduction is shared equally between them, so identical columns receive
identical importance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import ArgumentError, DataError
from .base import ClassifierModel, encode_labels

TIE_RTOL = 1e-12
MIN_GAIN = 1e-12


@dataclass(frozen=True)
class GBTConfig:
    n_trees: int = 100
    depth: int = 3
    shrinkage: float = 0.1


@njit(cache=True)
def _grow(X, order, xs, resid, hess, depth, feat, thr, leaf, importance):
    # order[j] holds row ids sorted by feature j and xs[j] their values; both
    # are kept partitioned by node so each node's rows are one sorted segment
    n, d = X.shape
    order = order.copy()
    xs = xs.copy()
    tmp_o = np.empty(n, np.int64)
    tmp_x = np.empty(n)
    node = np.zeros(n, np.int64)
    start = np.zeros(1, np.int64)
    stop = np.full(1, n, np.int64)
    right = np.zeros(n, np.bool_)
    inv = np.zeros(n + 1)
    for k in range(1, n + 1):
        inv[k] = 1.0 / k
    for level in range(depth):
        m = 1 << level
        gains = np.empty(d)
        thrs = np.empty(d)
        for q in range(m):
            gid = m - 1 + q
            a, b = start[q], stop[q]
            cnt = b - a
            tot = 0.0
            o0 = order[0]
            for t in range(a, b):
                tot += resid[o0[t]]
            parent = tot * tot / cnt if cnt > 0 else 0.0
            best = -1.0
            bj = -1
            for j in range(d):
                oj = order[j]
                xj = xs[j]
                gbest = -np.inf
                tbest = 0.0
                sl = 0.0
                last = 0.0
                for t in range(a, b):
                    x = xj[t]
                    nl = t - a
                    if nl > 0 and x > last:
                        nr = cnt - nl
                        sr = tot - sl
                        g = sl * sl * inv[nl] + sr * sr * inv[nr]
                        if g > gbest:
                            gbest = g
                            tbest = 0.5 * (last + x)
                    sl += resid[oj[t]]
                    last = x
                gains[j] = gbest - parent if gbest > -np.inf else -1.0
                thrs[j] = tbest
                if gains[j] > best:
                    best = gains[j]
                    bj = j
            if bj < 0 or best <= MIN_GAIN:
                feat[gid] = -1
                thr[gid] = np.inf
            else:
                feat[gid] = bj
                thr[gid] = thrs[bj]
                ties = 0
                for j in range(d):
                    if gains[j] >= best * (1.0 - TIE_RTOL):
                        ties += 1
                for j in range(d):
                    if gains[j] >= best * (1.0 - TIE_RTOL):
                        importance[j] += best / ties
            f = feat[gid]
            o0 = order[0]
            for t in range(a, b):
                i = o0[t]
                right[i] = f >= 0 and X[i, f] > thr[gid]
        # stable partition of every node segment into left then right child
        new_start = np.empty(2 * m, np.int64)
        new_stop = np.empty(2 * m, np.int64)
        for q in range(m):
            a, b = start[q], stop[q]
            nleft = 0
            o0 = order[0]
            for t in range(a, b):
                if not right[o0[t]]:
                    nleft += 1
            new_start[2 * q] = a
            new_stop[2 * q] = a + nleft
            new_start[2 * q + 1] = a + nleft
            new_stop[2 * q + 1] = b
        for j in range(d):
            oj = order[j]
            xj = xs[j]
            for q in range(m):
                a, b = start[q], stop[q]
                lo = a
                hi = new_start[2 * q + 1]
                for t in range(a, b):
                    i = oj[t]
                    if right[i]:
                        tmp_o[hi] = i
                        tmp_x[hi] = xj[t]
                        hi += 1
                    else:
                        tmp_o[lo] = i
                        tmp_x[lo] = xj[t]
                        lo += 1
            for t in range(n):
                oj[t] = tmp_o[t]
                xj[t] = tmp_x[t]
        start = new_start
        stop = new_stop
    nleaf = 1 << depth
    for q in range(nleaf):
        num = 0.0
        den = 0.0
        o0 = order[0]
        for t in range(start[q], stop[q]):
            i = o0[t]
            num += resid[i]
            den += hess[i]
            node[i] = q
        leaf[q] = num / den if den > 1e-300 else 0.0
    return node


@njit(cache=True)
def _boost(X, order, xs, y, n_trees, depth, shrinkage, feat, thr, leaf, importance):
    n = X.shape[0]
    p0 = 0.0
    for i in range(n):
        p0 += y[i]
    p0 /= n
    f0 = np.log(p0 / (1.0 - p0))
    F = np.full(n, f0)
    resid = np.empty(n)
    hess = np.empty(n)
    for t in range(n_trees):
        for i in range(n):
            p = 1.0 / (1.0 + np.exp(-F[i]))
            resid[i] = y[i] - p
            hess[i] = p * (1.0 - p)
        node = _grow(X, order, xs, resid, hess, depth, feat[t], thr[t], leaf[t], importance)
        for i in range(n):
            F[i] += shrinkage * leaf[t, node[i]]
    return f0


@njit(cache=True)
def _raw_scores(X, f0, feat, thr, leaf, depth, shrinkage):
    n = X.shape[0]
    out = np.full(n, f0)
    for t in range(feat.shape[0]):
        for i in range(n):
            q = 0
            for level in range(depth):
                gid = (1 << level) - 1 + q
                f = feat[t, gid]
                if f >= 0 and X[i, f] > thr[t, gid]:
                    q = 2 * q + 1
                else:
                    q = 2 * q
            out[i] += shrinkage * leaf[t, q]
    return out


class GBTModel(ClassifierModel):
    kind = "gbt"

    def __init__(self, classes, boosters, config: GBTConfig, importances, raw_importances):
        self.classes = classes
        self.boosters = boosters  # list of (f0, feat, thr, leaf)
        self.config = config
        self.importances = importances
        self.raw_importances = raw_importances

    def decision_function(self, X):
        X = np.ascontiguousarray(X, dtype=np.float64)
        cfg = self.config
        raw = np.stack([_raw_scores(X, f0, feat, thr, leaf, cfg.depth, cfg.shrinkage)
                        for f0, feat, thr, leaf in self.boosters], axis=1)
        if self.classes.size == 2:
            return np.concatenate([np.zeros((X.shape[0], 1)), raw], axis=1)
        return raw


def fit_gbt(X, y, config: GBTConfig = GBTConfig()) -> GBTModel:
    """Boosted depth-limited trees; importances normalized to sum to 1."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if not np.all(np.isfinite(X)):
        raise DataError("features contain non-finite values")
    if X.shape[0] < 2:
        raise ArgumentError("need at least 2 rows")
    classes, yi = encode_labels(y)
    n, d = X.shape
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    xs = np.ascontiguousarray(np.take_along_axis(X, order.T, axis=0).T)
    targets = [1] if classes.size == 2 else list(range(classes.size))
    internal = (1 << config.depth) - 1
    importance = np.zeros(d)
    boosters = []
    for c in targets:
        feat = np.full((config.n_trees, internal), -1, dtype=np.int64)
        thr = np.full((config.n_trees, internal), np.inf)
        leaf = np.zeros((config.n_trees, 1 << config.depth))
        yc = (yi == c).astype(np.float64)
        f0 = _boost(X, order, xs, yc, config.n_trees, config.depth, config.shrinkage,
                    feat, thr, leaf, importance)
        boosters.append((f0, feat, thr, leaf))
    total = importance.sum()
    normalized = importance / total if total > 0 else np.zeros(d)
    return GBTModel(classes, boosters, config, normalized, importance)
