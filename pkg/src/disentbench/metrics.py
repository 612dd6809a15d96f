"""Disentanglement scores.

Three scores are interventional (BetaVAE, FactorVAE, IRS) and sample their own
data from the factor space.  The others aggregate a
:class:`~disentbench.estimation.FactorCodeMatrix`, and any aggregation can be
paired with any estimator ("blends", e.g. ``MI-dci_d``).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError, DegenerateError, DisentError
from .estimation import FactorCodeMatrix, gbt_matrix, mi_matrix, svm_matrix
from .factors import FactorBatch, FactorSpace, OracleEncoder, encode, sample_factors
from .learners import LogisticConfig, fit_logistic, majority_vote
from .seeding import task_rng


@dataclass(frozen=True)
class EvalBudget:
    n_train: int = 10000
    n_test: int = 5000
    batch: int = 64
    bins: int = 20
    variance_threshold: float = 0.05

    def __post_init__(self):
        for name in ("n_train", "n_test", "batch", "bins"):
            if getattr(self, name) <= 0:
                raise ArgumentError(f"budget field {name} must be positive")
        if self.variance_threshold <= 0:
            raise ArgumentError("variance_threshold must be positive")

    @classmethod
    def at(cls, n: int, **kw) -> "EvalBudget":
        """Budget with ``n`` training points and half as many test points."""
        return cls(n_train=n, n_test=max(n // 2, 1), **kw)


@dataclass(frozen=True)
class MetricResult:
    metric: str
    estimator: str
    aggregation: str
    value: float
    n_samples: int = 0
    seed: int | None = None
    error: str | None = None

    @property
    def name(self) -> str:
        if self.estimator == "interventional":
            return self.metric
        return f"{self.estimator}-{self.aggregation}"

    @property
    def ok(self) -> bool:
        return self.error is None


def _result(metric, estimator, aggregation, value, n=0, seed=None) -> MetricResult:
    value = float(value)
    if value < -1e-9:
        raise ArgumentError(f"{metric} value {value} is negative")
    # SAP on an MI matrix is an unnormalized gap in nats; everything else is in [0, 1]
    unbounded = aggregation == "sap" and estimator == "MI"
    if not unbounded:
        if value > 1 + 1e-9:
            raise ArgumentError(f"{metric} value {value} outside [0, 1]")
        value = min(value, 1.0)
    return MetricResult(metric, estimator, aggregation, max(value, 0.0), n, seed)


def _codes(encoder, space, factors, rng):
    return encode(encoder, factors, "mean", rng).values


# interventional scores --------------------------------------------------------

def _fixed_batches(space, n, batch, rng):
    """``n`` batches of factor rows, each with one random factor at one random value."""
    k = space.n_factors
    cards = space.cardinalities
    labels = rng.integers(0, k, size=n)
    values = rng.integers(0, cards[labels])
    return labels, values


def _batch_codes(space, encoder, labels, values, batch, rng):
    n, k = labels.size, space.n_factors
    z = rng.integers(0, space.cardinalities, size=(n, batch, k))
    z[np.arange(n), :, labels] = values[:, None]
    codes = _codes(encoder, space, FactorBatch(z.reshape(-1, k), space), rng)
    return codes.reshape(n, batch, -1)


def _beta_vae_points(space, encoder, n, batch, rng):
    labels, values = _fixed_batches(space, n, batch, rng)
    za = _batch_codes(space, encoder, labels, values, batch, rng)
    zb = _batch_codes(space, encoder, labels, values, batch, rng)
    return np.mean(np.abs(za - zb), axis=1), labels


def beta_vae_score(space: FactorSpace, encoder: OracleEncoder,
                   budget: EvalBudget = EvalBudget(),
                   rng: np.random.Generator | None = None) -> MetricResult:
    """Test accuracy of a logistic regression predicting which factor was fixed.

    Each point averages ``|code(a) - code(b)|`` over ``budget.batch`` pairs
    drawn with one random factor held at one random value.
    """
    if space.n_factors < 2:
        raise ArgumentError("need at least 2 factors")
    rng = np.random.default_rng(0) if rng is None else rng
    xtr, ytr = _beta_vae_points(space, encoder, budget.n_train, budget.batch, rng)
    xte, yte = _beta_vae_points(space, encoder, budget.n_test, budget.batch, rng)
    try:
        model = fit_logistic(xtr, ytr, LogisticConfig())
        acc = model.score(xte, yte)
    except DisentError:
        # one class drawn in a tiny budget: predict it everywhere
        acc = float(np.mean(yte == ytr[0]))
    return _result("beta_vae", "interventional", "beta_vae", acc, budget.n_train)


def _factor_vae_votes(space, encoder, n, batch, global_var, active, rng):
    labels, values = _fixed_batches(space, n, batch, rng)
    z = _batch_codes(space, encoder, labels, values, batch, rng)
    active_idx = np.flatnonzero(active)
    ratio = np.var(z[:, :, active_idx], axis=1) / global_var[active_idx]
    return np.stack([active_idx[np.argmin(ratio, axis=1)], labels], axis=1)


def factor_vae_score(space: FactorSpace, encoder: OracleEncoder,
                     budget: EvalBudget = EvalBudget(),
                     rng: np.random.Generator | None = None) -> MetricResult:
    """Majority-vote accuracy mapping the least-varying code dimension to the fixed factor.

    Dimensions whose global variance is below ``budget.variance_threshold``
    are pruned before voting.
    """
    if space.n_factors < 2:
        raise ArgumentError("need at least 2 factors")
    rng = np.random.default_rng(0) if rng is None else rng
    codes = _codes(encoder, space, sample_factors(space, budget.n_train, rng), rng)
    global_var = np.var(codes, axis=0)
    active = global_var >= budget.variance_threshold
    if not active.any():
        raise DegenerateError("all dimensions collapsed")
    train = _factor_vae_votes(space, encoder, budget.n_train, budget.batch, global_var,
                              active, rng)
    test = _factor_vae_votes(space, encoder, budget.n_test, budget.batch, global_var,
                             active, rng)
    model = majority_vote(train)
    acc = model.score(test[:, 0], test[:, 1])
    return _result("factor_vae", "interventional", "factor_vae", acc, budget.n_train)


def _group_means(codes, keys, n_groups):
    counts = np.bincount(keys, minlength=n_groups).astype(float)
    sums = np.zeros((n_groups, codes.shape[1]))
    np.add.at(sums, keys, codes)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None], counts


def irs_score(space: FactorSpace, encoder: OracleEncoder, budget: EvalBudget = EvalBudget(),
              rng: np.random.Generator | None = None) -> MetricResult:
    """Interventional robustness, estimated from conditional means of i.i.d. samples.

    Each code dimension is assigned to the factor it shares the most MI with.
    For factor i and its dimensions D_i, the reference for value v is the mean
    code (on D_i) of samples with z_i = v; the disagreement caused by factor j
    is the largest L2 distance from that reference over the values of z_j,
    averaged over v.  The worst j, divided by the largest deviation of any
    sample from the overall mean on D_i, is subtracted from 1.  Dimensions are
    weighted by their variance.
    """
    if space.n_factors < 2:
        raise ArgumentError("need at least 2 factors")
    rng = np.random.default_rng(0) if rng is None else rng
    factors = sample_factors(space, budget.n_train, rng)
    codes = _codes(encoder, space, factors, rng)
    var = np.var(codes, axis=0)
    if not np.any(var > 0):
        raise DegenerateError("degenerate representation: every code dimension is constant")
    z = factors.values
    cards = space.cardinalities
    assign = np.argmax(mi_matrix(factors, codes, budget.bins).values, axis=0)
    dim_score = np.zeros(codes.shape[1])
    for i in range(space.n_factors):
        dims = np.flatnonzero((assign == i) & (var > 0))
        if dims.size == 0:
            continue
        c = codes[:, dims]
        normalizer = np.max(np.linalg.norm(c - c.mean(axis=0), axis=1))
        if normalizer == 0:
            continue
        ref, ref_counts = _group_means(c, z[:, i], cards[i])
        worst = 0.0
        for j in range(space.n_factors):
            if j == i:
                continue
            joint, counts = _group_means(c, z[:, i] * cards[j] + z[:, j], cards[i] * cards[j])
            joint = joint.reshape(cards[i], cards[j], -1)
            counts = counts.reshape(cards[i], cards[j])
            dist = np.linalg.norm(joint - ref[:, None, :], axis=2)
            dist = np.where(counts > 0, dist, 0.0)
            seen = ref_counts > 0
            pida = np.max(dist, axis=1)[seen].mean()
            worst = max(worst, pida)
        dim_score[dims] = 1.0 - min(worst / normalizer, 1.0)
    if np.sum(var) == 0:
        raise DegenerateError("degenerate representation")
    return _result("irs", "interventional", "irs", np.sum(var * dim_score) / np.sum(var),
                   budget.n_train)


# aggregations -----------------------------------------------------------------

def _top2(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = np.sort(rows, axis=1)
    return s[:, -1], s[:, -2]


def aggregate_mig(m: FactorCodeMatrix, factor_entropies=None) -> MetricResult:
    """Mean over factors of the gap between the two largest entries of the row.

    MI matrices normalize each gap by the factor entropy; other estimators by
    the row maximum.
    """
    v = m.values
    if v.shape[1] < 2:
        raise ArgumentError("MIG needs at least 2 code dimensions")
    top, second = _top2(v)
    if m.estimator == "MI" and factor_entropies is not None:
        norm = np.asarray(factor_entropies, dtype=float)
        if norm.shape != (v.shape[0],):
            raise ArgumentError("one entropy per factor required")
    else:
        norm = top
    if np.any(norm <= 0):
        raise DegenerateError("degenerate factor: zero entropy or all-zero row")
    return _result("mig", m.estimator, "mig", np.mean((top - second) / norm))


def aggregate_sap(m: FactorCodeMatrix) -> MetricResult:
    """Mean over factors of the gap between the two largest entries of the row.

    No normalization: on an MI matrix the result is in nats.
    """
    v = m.values
    if v.shape[1] < 2:
        raise ArgumentError("SAP needs at least 2 code dimensions")
    top, second = _top2(v)
    return _result("sap", m.estimator, "sap", np.mean(top - second))


def aggregate_modularity(m: FactorCodeMatrix, zero_column_modular: bool = True) -> MetricResult:
    """Mean over code dimensions of ``1 - delta`` with delta the normalized
    squared deviation of the column from its one-hot template.

    A column with no relation to any factor counts as perfectly modular unless
    ``zero_column_modular`` is false.
    """
    v = m.values
    k = v.shape[0]
    if k < 2:
        raise ArgumentError("modularity needs at least 2 factors")
    theta = v.max(axis=0)
    template = np.zeros_like(v)
    template[np.argmax(v, axis=0), np.arange(v.shape[1])] = theta
    with np.errstate(invalid="ignore", divide="ignore"):
        delta = np.sum((v - template) ** 2, axis=0) / (theta ** 2 * (k - 1))
    delta = np.where(theta > 0, delta, 0.0 if zero_column_modular else 1.0)
    return _result("modularity", m.estimator, "modularity", np.mean(1.0 - delta))


def _entropy_base(p: np.ndarray, base: int, axis: int) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return -terms.sum(axis=axis) / np.log(base)


def aggregate_dci_d(m: FactorCodeMatrix) -> MetricResult:
    """Importance-weighted mean over code dimensions of ``1 - H_K(column)``."""
    v = m.values
    total = v.sum()
    if total <= 0:
        raise DegenerateError("all-zero factor-code matrix")
    k = v.shape[0]
    col = v.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(col > 0, v / col, 0.0)
    per_code = 1.0 - _entropy_base(p, k, axis=0) if k > 1 else np.ones(v.shape[1])
    rho = col / total
    return _result("dci_d", m.estimator, "dci_d", np.sum(rho * per_code))


def aggregate_dci_c(m: FactorCodeMatrix) -> MetricResult:
    """Unweighted mean over factors of ``1 - H_d(row)``."""
    v = m.values
    if v.sum() <= 0:
        raise DegenerateError("all-zero factor-code matrix")
    d = v.shape[1]
    row = v.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(row[:, None] > 0, v / row[:, None], 0.0)
    per_factor = 1.0 - _entropy_base(p, d, axis=1) if d > 1 else np.ones(v.shape[0])
    per_factor = np.where(row > 0, per_factor, 0.0)
    return _result("dci_c", m.estimator, "dci_c", np.mean(per_factor))


def dci_informativeness(m: FactorCodeMatrix) -> MetricResult:
    """Mean GBT test accuracy over factors (prediction error is ``1 - value``)."""
    if m.estimator != "GBT" or m.row_accuracy is None:
        raise ArgumentError("informativeness needs a GBT matrix with cached accuracies")
    return _result("dci_i", "GBT", "dci_i", float(np.mean(m.row_accuracy)))


AGGREGATIONS = {
    "mig": aggregate_mig,
    "sap": aggregate_sap,
    "modularity": aggregate_modularity,
    "dci_d": aggregate_dci_d,
    "dci_c": aggregate_dci_c,
}

# conventional names: which estimator each published score pairs with
STANDARD_SCORES = {
    "mig": ("MI", "mig"),
    "modularity": ("MI", "modularity"),
    "dci_d": ("GBT", "dci_d"),
    "dci_c": ("GBT", "dci_c"),
    "sap": ("SVM", "sap"),
}

INTERVENTIONAL = {
    "beta_vae": beta_vae_score,
    "factor_vae": factor_vae_score,
    "irs": irs_score,
}


def aggregate(m: FactorCodeMatrix, aggregation: str, factor_entropies=None) -> MetricResult:
    if aggregation not in AGGREGATIONS:
        raise ArgumentError(f"unknown aggregation {aggregation!r}")
    if aggregation == "mig":
        return aggregate_mig(m, factor_entropies)
    return AGGREGATIONS[aggregation](m)


def blend_scores(matrices, aggregations=tuple(AGGREGATIONS), factor_entropies=None
                 ) -> list[MetricResult]:
    """Every (matrix, aggregation) pair; failed cells carry an error marker."""
    matrices = list(matrices)
    aggregations = list(aggregations)
    if not matrices or not aggregations:
        raise ArgumentError("need at least one matrix and one aggregation")
    out = []
    for m in matrices:
        for agg in aggregations:
            try:
                out.append(aggregate(m, agg, factor_entropies))
            except DisentError as exc:
                out.append(MetricResult(agg, m.estimator, agg, float("nan"),
                                        error=f"{type(exc).__name__}: {exc}"))
    return out


def compute_matrices(space: FactorSpace, encoder: OracleEncoder,
                     budget: EvalBudget = EvalBudget(),
                     rng: np.random.Generator | None = None,
                     estimators=("MI", "GBT", "SVM")
                     ) -> dict[str, FactorCodeMatrix]:
    """All requested factor-code matrices from one i.i.d. train/test draw."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = budget.n_train + budget.n_test
    factors = sample_factors(space, n, rng)
    codes = encode(encoder, factors, "mean", rng)
    out = {}
    for est in estimators:
        if est == "MI":
            out["MI"] = mi_matrix(factors[: budget.n_train], _rows(codes, budget.n_train),
                                  budget.bins)
        elif est == "GBT":
            out["GBT"] = gbt_matrix(factors, codes, budget.n_train, budget.n_test)
        elif est == "SVM":
            out["SVM"] = svm_matrix(factors, codes, n_train=budget.n_train,
                                    n_test=budget.n_test)
        else:
            raise ArgumentError(f"unknown estimator {est!r}")
    return out


def _rows(codes, n):
    return codes.values[:n]


def with_seed(r: MetricResult, seed: int | None, n: int | None = None) -> MetricResult:
    return replace(r, seed=seed, n_samples=r.n_samples if n is None else n)


MATRIX_METRICS = tuple(STANDARD_SCORES) + ("dci_i",)
ALL_METRICS = tuple(INTERVENTIONAL) + MATRIX_METRICS


def _parse_metric(name: str) -> tuple[str, str]:
    """Map a metric name to (estimator, aggregation)."""
    if name in INTERVENTIONAL:
        return "interventional", name
    if name == "dci_i":
        return "GBT", "dci_i"
    if name in STANDARD_SCORES:
        return STANDARD_SCORES[name]
    est, sep, agg = name.partition("-")
    if sep and est in ("MI", "GBT", "SVM") and agg in AGGREGATIONS:
        return est, agg
    raise ArgumentError(f"unknown metric {name!r}")


def _score(name, est, agg, matrices, entropies, budget, seed):
    if agg == "dci_i":
        r = dci_informativeness(matrices["GBT"])
    else:
        r = aggregate(matrices[est], agg, entropies)
    return replace(r, metric=name, n_samples=budget.n_train, seed=seed)


def _failed(name, est, agg, budget, seed, exc) -> MetricResult:
    return MetricResult(name, est, agg, float("nan"), budget.n_train, seed,
                        error=f"{type(exc).__name__}: {exc}")


def evaluate(space: FactorSpace, encoder: OracleEncoder, metrics,
             budget: EvalBudget = EvalBudget(), rng: np.random.Generator | None = None,
             seed: int | None = None, return_matrices: bool = False):
    """Evaluate named metrics (standard names or ``EST-agg`` blends) on one encoder.

    Each interventional score and the shared matrix draw get their own seed
    derived from ``rng``, so a score does not depend on which others were
    requested.  Failures are returned as results carrying an error marker.
    With ``return_matrices`` the factor-code matrices are returned as well.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    base = int(rng.integers(0, 2**63 - 1))
    parsed = [(name, *_parse_metric(name)) for name in metrics]
    estimators = sorted({est for _, est, _ in parsed if est != "interventional"})
    matrices: dict = {}
    matrix_error = None
    if estimators:
        try:
            matrices = compute_matrices(space, encoder, budget, task_rng(base, "matrices"),
                                        estimators)
        except DisentError as exc:
            matrix_error = exc
    out = []
    for name, est, agg in parsed:
        try:
            if est == "interventional":
                r = INTERVENTIONAL[name](space, encoder, budget, task_rng(base, name))
                r = replace(r, metric=name, n_samples=budget.n_train, seed=seed)
            elif matrix_error is not None:
                raise matrix_error
            else:
                r = _score(name, est, agg, matrices, space.entropies(), budget, seed)
        except DisentError as exc:
            r = _failed(name, est, agg, budget, seed, exc)
        out.append(r)
    return (out, matrices) if return_matrices else out


def split_budget(n_rows: int, budget: EvalBudget) -> EvalBudget:
    """Shrink the train/test split to fit ``n_rows`` (two thirds train)."""
    if n_rows >= budget.n_train + budget.n_test:
        return budget
    if n_rows < 3:
        raise ArgumentError(f"need at least 3 rows, got {n_rows}")
    n_train = (2 * n_rows) // 3
    return replace(budget, n_train=n_train, n_test=n_rows - n_train)


def evaluate_batches(factors: FactorBatch, codes, metrics, budget: EvalBudget = EvalBudget(),
                     seed: int | None = None, return_matrices: bool = False):
    """Matrix-based metrics on fixed data; interventional scores are reported as failed.

    The first ``n_train`` rows train and the next ``n_test`` rows test; the
    split shrinks to two thirds / one third when fewer rows are available.
    """
    values = np.asarray(getattr(codes, "values", codes), dtype=np.float64)
    budget = split_budget(len(factors), budget)
    parsed = [(name, *_parse_metric(name)) for name in metrics]
    estimators = sorted({est for _, est, _ in parsed if est != "interventional"})
    matrices: dict = {}
    matrix_error = None
    try:
        for est in estimators:
            if est == "MI":
                matrices["MI"] = mi_matrix(factors[: budget.n_train], values[: budget.n_train],
                                           budget.bins)
            elif est == "GBT":
                matrices["GBT"] = gbt_matrix(factors, values, budget.n_train, budget.n_test)
            else:
                matrices["SVM"] = svm_matrix(factors, values, n_train=budget.n_train,
                                             n_test=budget.n_test)
    except DisentError as exc:
        matrix_error = exc
    out = []
    for name, est, agg in parsed:
        try:
            if est == "interventional":
                raise ArgumentError(f"{name} needs an oracle encoder to intervene on")
            if matrix_error is not None:
                raise matrix_error
            out.append(_score(name, est, agg, matrices, factors.space.entropies(), budget, seed))
        except DisentError as exc:
            out.append(_failed(name, est, agg, budget, seed, exc))
    return (out, matrices) if return_matrices else out
