"""Study-level statistics over many evaluated representations.

Most functions here consume a *score table*: a long-format
:class:`pandas.DataFrame` with one row per (encoder, seed, metric, sample
size) evaluation, see :data:`SCORE_COLUMNS`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ArgumentError, DegenerateError, DisentError
from .estimation import FactorCodeMatrix
from .factors import FactorSpace, OracleEncoder, encode, sample_factors
from .learners import (ConstantModel, GBTConfig, fit_gbt, fit_logistic_cv, ols_r2,
                       spearman)
from .metrics import EvalBudget, evaluate

SCORE_COLUMNS = ["encoder_id", "dataset_id", "method_label", "hyperparam_label", "seed",
                 "metric_name", "n_samples", "value"]
UNSUPERVISED_METRICS = ("tc_mean", "tc_sampled", "avg_mi_mean", "avg_mi_sampled")
DOWNSTREAM_PREFIXES = ("downstream", "efficiency")


# score tables -----------------------------------------------------------------

def score_table(records) -> pd.DataFrame:
    """Build and validate a score table from dicts or an existing frame."""
    df = pd.DataFrame(records)
    missing = [c for c in SCORE_COLUMNS if c not in df.columns]
    if missing:
        raise ArgumentError(f"score table is missing columns {missing}")
    df = df[SCORE_COLUMNS].copy()
    if not np.all(np.isfinite(df["value"].to_numpy(dtype=float))):
        raise ArgumentError("score table values must be finite")
    key = ["dataset_id", "encoder_id", "metric_name", "seed", "n_samples"]
    dup = df.duplicated(key)
    if dup.any():
        raise ArgumentError(f"duplicate score-table keys: {df.loc[dup, key].head(3).values.tolist()}")
    return df.sort_values(key, kind="mergesort").reset_index(drop=True)


def _is_downstream(name: str) -> bool:
    return name.startswith(DOWNSTREAM_PREFIXES)


def _corr_frame(wide: pd.DataFrame, rows: Sequence[str], cols: Sequence[str],
                min_pairs: int = 2) -> pd.DataFrame:
    out = pd.DataFrame(np.nan, index=list(rows), columns=list(cols))
    for r in rows:
        for c in cols:
            pair = wide[[r, c]].dropna() if r != c else wide[[r]].dropna()
            if len(pair) < min_pairs:
                continue
            x = pair[r].to_numpy(float)
            y = pair[c].to_numpy(float) if r != c else x
            try:
                out.loc[r, c] = spearman(x, y)
            except DisentError:
                pass
    return out


def rank_corr_table(table: pd.DataFrame, axis: str = "metric_vs_metric", *,
                    dataset_id: str | None = None, metric_name: str | None = None,
                    n_samples: int | None = None, min_pairs: int = 2) -> pd.DataFrame:
    """Spearman correlation matrix; cells without enough paired data are NaN.

    ``metric_vs_metric``, ``unsupervised_vs_metric`` and ``metric_vs_downstream``
    pair scores of the same model (dataset, encoder, seed).
    ``metric_vs_dataset`` needs ``metric_name`` and pairs models across data
    sets by (method, hyperparameter, seed).
    """
    df = table
    if n_samples is not None:
        df = df[df["n_samples"] == n_samples]
    if axis == "metric_vs_dataset":
        if metric_name is None:
            raise ArgumentError("metric_vs_dataset needs metric_name")
        sub = df[df["metric_name"] == metric_name]
        wide = sub.pivot_table(index=["method_label", "hyperparam_label", "seed"],
                               columns="dataset_id", values="value", aggfunc="mean")
        names = sorted(wide.columns)
        return _corr_frame(wide, names, names, min_pairs)
    if dataset_id is not None:
        df = df[df["dataset_id"] == dataset_id]
    wide = df.pivot_table(index=["dataset_id", "encoder_id", "seed"], columns="metric_name",
                          values="value", aggfunc="mean")
    names = sorted(wide.columns)
    unsup = [n for n in names if n in UNSUPERVISED_METRICS]
    down = [n for n in names if _is_downstream(n)]
    sup = [n for n in names if n not in unsup and n not in down]
    if axis == "metric_vs_metric":
        return _corr_frame(wide, sup, sup, min_pairs)
    if axis == "unsupervised_vs_metric":
        return _corr_frame(wide, unsup, sup, min_pairs)
    if axis == "metric_vs_downstream":
        return _corr_frame(wide, sup, down, min_pairs)
    raise ArgumentError(f"unknown axis {axis!r}")


def variance_explained(table: pd.DataFrame, predictors: str = "method") -> pd.DataFrame:
    """R^2 of OLS on method labels (or method x hyperparameter) per data set and metric."""
    if predictors == "method":
        cols = ["method_label"]
    elif predictors in ("method_hyperparam", "method x hyperparam", "method×hyperparam"):
        cols = ["method_label", "hyperparam_label"]
    else:
        raise ArgumentError(f"unknown predictor design {predictors!r}")
    rows = []
    for (ds, metric), sub in table.groupby(["dataset_id", "metric_name"], sort=True):
        groups = sub[cols].drop_duplicates()
        if len(groups) < 2:
            raise DegenerateError(f"only one group for ({ds}, {metric})")
        r2 = ols_r2([sub[c].to_numpy() for c in cols], sub["value"].to_numpy(float))
        rows.append({"dataset_id": ds, "metric_name": metric, "r2": r2})
    return pd.DataFrame(rows)


def transfer_protocol(table: pd.DataFrame, trials: int = 10000,
                      rng: np.random.Generator | None = None) -> pd.DataFrame:
    """Probability that transferred hyperparameter selection matches or beats a random model.

    Each trial draws a seed, a metric and a data set, selects the
    (method, hyperparameter) setting with the highest score there, and compares
    its score under a different seed against a uniformly drawn model, on the
    same or a different metric and the same or a different data set.  Ties
    count as wins.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    datasets = sorted(table["dataset_id"].unique())
    metrics = sorted(table["metric_name"].unique())
    settings = sorted(set(zip(table["method_label"], table["hyperparam_label"])))
    seeds = sorted(table["seed"].unique())
    if len(datasets) < 2 or len(metrics) < 2 or len(seeds) < 2:
        raise ArgumentError("need at least 2 data sets, 2 metrics and 2 seeds")
    di = {v: i for i, v in enumerate(datasets)}
    mi = {v: i for i, v in enumerate(metrics)}
    si = {v: i for i, v in enumerate(settings)}
    ri = {v: i for i, v in enumerate(seeds)}
    S = np.full((len(datasets), len(metrics), len(settings), len(seeds)), np.nan)
    S[[di[v] for v in table["dataset_id"]], [mi[v] for v in table["metric_name"]],
      [si[v] for v in zip(table["method_label"], table["hyperparam_label"])],
      [ri[v] for v in table["seed"]]] = table["value"].to_numpy(float)

    nd, nm, ns, nr = S.shape
    base = int(rng.integers(0, 2**63 - 1))
    wins = np.zeros((2, 2))
    counts = np.zeros((2, 2))

    def other(rg, n, current):
        j = int(rg.integers(0, n - 1))
        return j + (j >= current)

    for t in range(trials):
        rg = np.random.default_rng([base, t])
        s, m, d = int(rg.integers(nr)), int(rg.integers(nm)), int(rg.integers(nd))
        col = S[d, m, :, s]
        if np.all(np.isnan(col)):
            continue
        best = int(np.nanargmax(col))
        for a, same_metric in enumerate((True, False)):
            for b, same_data in enumerate((True, False)):
                m2 = m if same_metric else other(rg, nm, m)
                d2 = d if same_data else other(rg, nd, d)
                s2 = other(rg, nr, s)
                chosen = S[d2, m2, best, s2]
                rand = S[d2, m2, int(rg.integers(ns)), int(rg.integers(nr))]
                if np.isnan(chosen) or np.isnan(rand):
                    continue
                counts[a, b] += 1
                wins[a, b] += chosen >= rand
    with np.errstate(invalid="ignore"):
        prob = wins / counts
    return pd.DataFrame(prob, index=["same_metric", "different_metric"],
                        columns=["same_dataset", "different_dataset"])


# downstream tasks -------------------------------------------------------------

@dataclass
class DownstreamResult:
    accuracy: dict[int, float]
    fallbacks: list[tuple[int, int]] = field(default_factory=list)  # (size, factor)


def downstream(space: FactorSpace, encoder: OracleEncoder,
               sizes: Sequence[int] = (10, 100, 1000, 10000), learner: str = "logistic_cv",
               rng: np.random.Generator | None = None, n_test: int = 5000,
               gbt_config: GBTConfig = GBTConfig()) -> DownstreamResult:
    """Mean test accuracy over factors of a per-factor classifier, per training size.

    Factors with a single class in a tiny training set fall back to predicting
    that class; such cases are listed in ``fallbacks``.
    """
    if any(s <= 0 for s in sizes):
        raise ArgumentError("training sizes must be positive")
    if learner not in ("logistic_cv", "gbt"):
        raise ArgumentError(f"unknown learner {learner!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    test_f = sample_factors(space, n_test, rng)
    xte = encode(encoder, test_f, "mean", rng).values
    result = DownstreamResult({})
    for size in sizes:
        train_f = sample_factors(space, int(size), rng)
        xtr = encode(encoder, train_f, "mean", rng).values
        accs = []
        for k in range(space.n_factors):
            y = train_f.values[:, k]
            if np.unique(y).size < 2:
                model = ConstantModel(y[0])
                result.fallbacks.append((int(size), k))
            elif learner == "gbt":
                model = fit_gbt(xtr, y, gbt_config)
            else:
                model = fit_logistic_cv(xtr, y)
            accs.append(model.score(xte, test_f.values[:, k]))
        result.accuracy[int(size)] = float(np.mean(accs))
    return result


def statistical_efficiency(accuracy, small: int = 100, large: int = 10000) -> float:
    """Accuracy with ``small`` training points divided by accuracy with ``large``."""
    acc = getattr(accuracy, "accuracy", accuracy)
    if small not in acc or large not in acc:
        raise ArgumentError(f"need accuracies at sizes {small} and {large}")
    if acc[large] <= 0:
        raise DegenerateError("zero accuracy at the large training size")
    return float(acc[small] / acc[large])


# factor-code graph ------------------------------------------------------------

class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def _graph_weights(m) -> np.ndarray:
    v = np.asarray(getattr(m, "values", m), dtype=float)
    if v.ndim != 2 or np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ArgumentError("need a finite nonnegative K x d matrix")
    top = v.max()
    if top <= 0:
        raise DegenerateError("all-zero factor-code matrix")
    # entries already on [0, 1] are used as is; larger ones are scaled by the max
    return v / top if top > 1.0 else v


def _components(w: np.ndarray, t: float) -> tuple[int, int]:
    k, d = w.shape
    uf = _UnionFind(k + d)
    keep = np.argwhere(w >= t)
    for f, c in keep:
        uf.union(int(f), k + int(c))
    sizes: dict[int, int] = {}
    for node in range(k + d):
        r = uf.find(node)
        sizes[r] = sizes.get(r, 0) + 1
    big = sum(1 for s in sizes.values() if s > 1)
    connected = int(np.any(w >= t, axis=1).sum())
    return big, connected


def independent_groups_curve(m, thresholds) -> pd.DataFrame:
    """Per threshold: components of size > 1 and factors with at least one kept edge."""
    w = _graph_weights(m)
    rows = []
    for t in np.asarray(thresholds, dtype=float):
        big, connected = _components(w, t)
        rows.append({"threshold": float(t), "components": big, "factors_connected": connected})
    return pd.DataFrame(rows)


@dataclass(frozen=True)
class Dendrogram:
    merges: tuple[tuple[float, tuple[int, int]], ...]
    pair_thresholds: np.ndarray
    curve: pd.DataFrame = field(compare=False)
    factor_names: tuple[str, ...] = ()


def dendrogram(m) -> Dendrogram:
    """Exact merge thresholds from a descending sweep over distinct edge weights.

    The merge threshold of two factors is the largest t such that they share a
    connected component once every edge lighter than t is deleted.
    """
    w = _graph_weights(m)
    k, d = w.shape
    names = tuple(getattr(m, "factor_names", ())) or tuple(f"factor_{i}" for i in range(k))
    uf = _UnionFind(k + d)
    edges = sorted(((float(w[f, c]), f, c) for f in range(k) for c in range(d)),
                   key=lambda e: (-e[0], e[1], e[2]))
    pair = np.full((k, k), np.nan)
    np.fill_diagonal(pair, 0.0)
    merges = []
    curve = []
    i = 0
    while i < len(edges):
        t = edges[i][0]
        while i < len(edges) and edges[i][0] == t:
            _, f, c = edges[i]
            rf, rc = uf.find(f), uf.find(k + c)
            if rf != rc:
                fa = [x for x in range(k) if uf.find(x) == rf]
                fb = [x for x in range(k) if uf.find(x) == rc]
                if fa and fb:
                    merges.append((t, tuple(sorted((min(fa), min(fb))))))
                    for a in fa:
                        for b in fb:
                            if np.isnan(pair[a, b]):
                                pair[a, b] = pair[b, a] = t
                uf.union(f, k + c)
            i += 1
        big, connected = _components(w, t)
        curve.append({"threshold": t, "components": big, "factors_connected": connected})
    pair = np.nan_to_num(pair, nan=0.0)
    np.fill_diagonal(pair, 0.0)
    merges.sort(key=lambda e: -e[0])
    return Dendrogram(tuple(merges), pair, pd.DataFrame(curve), names)


def confusion_thresholds(dendrograms: Sequence[Dendrogram]) -> np.ndarray:
    """Mean merge threshold per factor pair; higher means more entangled."""
    dendrograms = list(dendrograms)
    if not dendrograms:
        raise ArgumentError("need at least one dendrogram")
    shape = dendrograms[0].pair_thresholds.shape
    names = dendrograms[0].factor_names
    for dg in dendrograms[1:]:
        if dg.pair_thresholds.shape != shape or dg.factor_names != names:
            raise ArgumentError("dendrograms come from different factor spaces")
    return np.mean([dg.pair_thresholds for dg in dendrograms], axis=0)


# reliability ------------------------------------------------------------------

def evaluation_run(space: FactorSpace, encoders: Sequence[OracleEncoder], metrics: Sequence[str],
                   n: int, seed: int) -> pd.DataFrame:
    """Scores of every encoder (rows) on every metric (columns) at budget ``n``."""
    budget = EvalBudget.at(n)
    rows = []
    for i, e in enumerate(encoders):
        results = evaluate(space, e, metrics, budget, np.random.default_rng([seed, i]))
        rows.append({r.metric: r.value for r in results})
    return pd.DataFrame(rows, columns=list(metrics))


def rank_stability(run_a: pd.DataFrame, run_b: pd.DataFrame) -> dict[str, float]:
    """Per-metric Spearman between two evaluation runs over the same encoders."""
    out = {}
    for name in run_a.columns:
        try:
            out[name] = spearman(run_a[name].to_numpy(float), run_b[name].to_numpy(float))
        except DisentError:
            out[name] = float("nan")
    return out


def reliability(space: FactorSpace, encoders: Sequence[OracleEncoder], metric,
                n: int, rng: np.random.Generator | None = None, same_seed: bool = False):
    """Spearman between two independently seeded evaluations over ``encoders``.

    ``metric`` may be one name (returns a float) or a list (returns a dict).
    """
    encoders = list(encoders)
    if len(encoders) < 10:
        raise ArgumentError(f"need at least 10 encoders, got {len(encoders)}")
    rng = np.random.default_rng(0) if rng is None else rng
    names = [metric] if isinstance(metric, str) else list(metric)
    seed_a = int(rng.integers(0, 2**63 - 1))
    seed_b = seed_a if same_seed else int(rng.integers(0, 2**63 - 1))
    run_a = evaluation_run(space, encoders, names, n, seed_a)
    run_b = evaluation_run(space, encoders, names, n, seed_b)
    if isinstance(metric, str):
        return spearman(run_a[metric].to_numpy(float), run_b[metric].to_numpy(float))
    return rank_stability(run_a, run_b)
