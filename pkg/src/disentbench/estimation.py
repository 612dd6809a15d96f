"""Factor-code relation matrices and unsupervised representation statistics.

Every matrix is K x d with rows indexing factors and columns indexing code
dimensions, and every estimator uses the orientation "bigger means a
stronger relation".  In particular the SVM matrix stores test *accuracy*
rather than prediction error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import ArgumentError
from .factors import (CodeBatch, FactorBatch, FactorSpace, OracleEncoder, encode_both,
                      sample_factors)
from .learners import (GBTConfig, discretize, fit_gaussian, fit_gbt, fit_linear_svm,
                       gaussian_tc, mutual_information)

ESTIMATORS = ("MI", "GBT", "SVM")


@dataclass(frozen=True)
class FactorCodeMatrix:
    values: np.ndarray
    estimator: str
    factor_names: tuple[str, ...] = ()
    code_names: tuple[str, ...] = ()
    row_accuracy: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ArgumentError(f"factor-code matrix must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ArgumentError("factor-code matrix must be finite and nonnegative")
        if self.estimator not in ESTIMATORS:
            raise ArgumentError(f"unknown estimator tag {self.estimator!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        k, d = v.shape
        if not self.factor_names:
            object.__setattr__(self, "factor_names", tuple(f"factor_{i}" for i in range(k)))
        if not self.code_names:
            object.__setattr__(self, "code_names", tuple(f"code_{i}" for i in range(d)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def permute_codes(self, perm) -> "FactorCodeMatrix":
        perm = list(perm)
        return FactorCodeMatrix(self.values[:, perm], self.estimator, self.factor_names,
                                tuple(self.code_names[i] for i in perm), self.row_accuracy)

    def metadata(self) -> dict:
        meta = {"estimator": self.estimator, "rows": list(self.factor_names),
                "columns": list(self.code_names), "orientation": "rows=factors"}
        if self.row_accuracy is not None:
            meta["row_accuracy"] = [float(a) for a in self.row_accuracy]
        return meta


def _arrays(factors, codes):
    z = np.asarray(getattr(factors, "values", factors))
    c = np.asarray(getattr(codes, "values", codes), dtype=np.float64)
    if z.ndim != 2 or c.ndim != 2 or z.shape[0] != c.shape[0]:
        raise ArgumentError(f"unpaired batches: factors {z.shape}, codes {c.shape}")
    return z, c


def _names(factors) -> tuple[str, ...]:
    space = getattr(factors, "space", None)
    return tuple(space.names) if space is not None else ()


def mi_matrix(factors: FactorBatch, codes: CodeBatch, bins: int = 20) -> FactorCodeMatrix:
    """Plug-in MI between each factor and each 20-bin discretized code dimension."""
    z, c = _arrays(factors, codes)
    if z.shape[0] < 2:
        raise ArgumentError("need at least 2 rows")
    disc = discretize(c, bins).values
    m = np.array([[mutual_information(z[:, k], disc[:, i]) for i in range(c.shape[1])]
                  for k in range(z.shape[1])])
    return FactorCodeMatrix(m, "MI", _names(factors))


def _split(z, c, n_train, n_test):
    if z.shape[0] < n_train + n_test:
        raise ArgumentError(
            f"need {n_train + n_test} rows for a {n_train}/{n_test} split, got {z.shape[0]}")
    return (z[:n_train], c[:n_train], z[n_train:n_train + n_test],
            c[n_train:n_train + n_test])


def gbt_matrix(factors: FactorBatch, codes: CodeBatch, n_train: int = 10000,
               n_test: int = 5000, config: GBTConfig = GBTConfig()) -> FactorCodeMatrix:
    """GBT feature importances per factor; caches per-factor test accuracy."""
    z, c = _arrays(factors, codes)
    ztr, ctr, zte, cte = _split(z, c, n_train, n_test)
    rows, acc = [], []
    for k in range(z.shape[1]):
        model = fit_gbt(ctr, ztr[:, k], config)
        rows.append(np.abs(model.importances))
        acc.append(model.score(cte, zte[:, k]))
    return FactorCodeMatrix(np.array(rows), "GBT", _names(factors),
                            row_accuracy=np.array(acc))


def svm_matrix(factors: FactorBatch, codes: CodeBatch, C: float = 0.01,
               n_train: int = 10000, n_test: int = 5000) -> FactorCodeMatrix:
    """Test accuracy of a 1-D linear SVM predicting each factor from each code."""
    z, c = _arrays(factors, codes)
    ztr, ctr, zte, cte = _split(z, c, n_train, n_test)
    m = np.zeros((z.shape[1], c.shape[1]))
    for k in range(z.shape[1]):
        for i in range(c.shape[1]):
            model = fit_linear_svm(ctr[:, i], ztr[:, k], C=C)
            m[k, i] = model.score(cte[:, [i]], zte[:, k])
    return FactorCodeMatrix(m, "SVM", _names(factors))


@dataclass(frozen=True)
class UnsupervisedScores:
    tc_mean: float
    tc_sampled: float
    avg_mi_mean: float
    avg_mi_sampled: float

    def as_dict(self) -> dict[str, float]:
        return {"tc_mean": self.tc_mean, "tc_sampled": self.tc_sampled,
                "avg_mi_mean": self.avg_mi_mean, "avg_mi_sampled": self.avg_mi_sampled}


def pairwise_mi(codes, bins: int = 20) -> np.ndarray:
    """Symmetric d x d matrix of discrete MI between code dimensions (zero diagonal)."""
    c = np.asarray(getattr(codes, "values", codes))
    disc = discretize(c, bins).values
    d = c.shape[1]
    out = np.zeros((d, d))
    for i, j in combinations(range(d), 2):
        out[i, j] = out[j, i] = mutual_information(disc[:, i], disc[:, j])
    return out


def average_pairwise_mi(codes, bins: int = 20) -> float:
    d = np.asarray(getattr(codes, "values", codes)).shape[1]
    if d < 2:
        return 0.0
    m = pairwise_mi(codes, bins)
    return float(m[np.triu_indices(d, 1)].mean())


def unsupervised_scores(encoder: OracleEncoder, space: FactorSpace, n: int = 10000,
                        rng: np.random.Generator | None = None,
                        bins: int = 20) -> UnsupervisedScores:
    """Gaussian TC and mean pairwise MI of mean and sampled codes of one factor draw."""
    rng = np.random.default_rng(0) if rng is None else rng
    d = encoder.output_dim(space)
    if n < d + 1:
        raise ArgumentError(f"need n >= d + 1 = {d + 1}, got {n}")
    factors = sample_factors(space, n, rng)
    mean, sampled = encode_both(encoder, factors, rng)
    return scores_from_codes(mean, sampled, bins)


def scores_from_codes(mean: CodeBatch, sampled: CodeBatch, bins: int = 20) -> UnsupervisedScores:
    return UnsupervisedScores(
        gaussian_tc(fit_gaussian(mean)), gaussian_tc(fit_gaussian(sampled)),
        average_pairwise_mi(mean, bins), average_pairwise_mi(sampled, bins))
