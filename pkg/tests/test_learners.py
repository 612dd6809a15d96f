import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from disentbench import ArgumentError, DataError, DegenerateError, DegenerateLabelError
from disentbench.learners import (GBTConfig, discretize, entropy, fit_gaussian, fit_gbt,
                                  fit_linear_svm, fit_logistic, fit_logistic_cv, gaussian_tc,
                                  majority_vote, mutual_information, ols_r2, spearman)


# discretization and information ------------------------------------------------

def test_separated_values_get_distinct_bins():
    d = discretize(np.array([0.125, 0.375, 0.625, 0.875]), 20)
    assert np.unique(d.values).size == 4


def test_constant_column_single_bin():
    d = discretize(np.full((10, 1), 3.0))
    assert np.all(d.values == 0)
    assert entropy(d.values[:, 0]) == 0.0


def test_uniform_column_bin_frequencies(rng):
    d = discretize(rng.random(100_000), 20)
    freq = np.bincount(d.values[:, 0], minlength=20) / 100_000
    assert np.all(np.abs(freq - 0.05) <= 0.005)


def test_discretize_rejects_non_finite():
    with pytest.raises(DataError):
        discretize(np.array([0.0, np.inf, 1.0]))


def test_mi_exact_cases():
    a = np.arange(4)
    assert mutual_information(a, a) == pytest.approx(math.log(4), abs=1e-15)
    x, y = np.meshgrid(np.arange(4), np.arange(4))
    assert abs(mutual_information(x.ravel(), y.ravel())) < 1e-15
    assert mutual_information(a, a % 2) == pytest.approx(math.log(2), abs=1e-15)


def test_mi_length_mismatch():
    with pytest.raises(ArgumentError):
        mutual_information(np.arange(3), np.arange(4))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 3)), min_size=2, max_size=60))
def test_mi_symmetric_and_bounded(pairs):
    a, b = np.array(pairs).T
    mi = mutual_information(a, b)
    assert mi == pytest.approx(mutual_information(b, a), abs=1e-12)
    assert -1e-12 <= mi <= min(entropy(a), entropy(b)) + 1e-12


# logistic regression -----------------------------------------------------------

def test_logistic_separable():
    x = np.r_[np.linspace(-2, -0.5, 50), np.linspace(0.5, 2, 50)][:, None]
    y = (x[:, 0] > 0).astype(int)
    assert fit_logistic(x, y).score(x, y) == 1.0


def test_logistic_chance_band(rng):
    x = rng.standard_normal((8000, 3))
    y = np.tile(np.arange(4), 2000)
    m = fit_logistic(x[:4000], y[:4000])
    assert 0.20 <= m.score(x[4000:], y[4000:]) <= 0.30


def test_logistic_single_class():
    with pytest.raises(DegenerateLabelError):
        fit_logistic(np.zeros((5, 1)), np.ones(5))


def test_logistic_cv_identity_features(rng):
    z = rng.integers(0, 4, size=(1000, 2))
    x = (z + 0.5) / 4
    for k in range(2):
        m = fit_logistic_cv(x[:800], z[:800, k])
        assert m.score(x[800:], z[800:, k]) == 1.0


def test_logistic_cv_tiny_sample():
    x = np.linspace(0, 1, 10)[:, None]
    y = np.array([0, 0, 0, 1, 1, 1, 2, 2, 3, 3])
    m = fit_logistic_cv(x, y)
    assert m.predict(x).shape == (10,)


def test_logistic_cv_noise_is_chance(rng):
    x = rng.standard_normal((7000, 2))
    y = rng.integers(0, 3, size=7000)
    m = fit_logistic_cv(x[:2000], y[:2000])
    assert abs(m.score(x[2000:], y[2000:]) - 1 / 3) <= 0.05


def test_logistic_cv_needs_two_rows():
    with pytest.raises(DataError):
        fit_logistic_cv(np.zeros((1, 1)), [0])


# linear SVM --------------------------------------------------------------------

def test_svm_margin_one():
    x = np.r_[np.linspace(-3, -0.5, 40), np.linspace(0.5, 3, 40)]
    y = np.r_[np.zeros(40), np.ones(40)]
    assert fit_linear_svm(x, y).score(x[:, None], y) == 1.0


def test_svm_four_valued_factor_from_its_code():
    z = np.tile(np.arange(4), 250)
    x = (z + 0.5) / 4
    assert fit_linear_svm(x, z).score(x[:, None], z) >= 0.95


def test_svm_shuffled_labels(rng):
    z = rng.integers(0, 4, size=6000)
    x = (z + 0.5) / 4
    y = rng.permutation(z)
    m = fit_linear_svm(x[:3000], y[:3000])
    assert abs(m.score(x[3000:, None], y[3000:]) - 0.25) <= 0.05


def test_svm_single_class():
    with pytest.raises(DegenerateLabelError):
        fit_linear_svm(np.arange(4.0), np.zeros(4))


# gradient boosting -------------------------------------------------------------

def test_gbt_importance_concentrates(rng):
    x = rng.random((2000, 2))
    y = (x[:, 0] * 4).astype(int)
    m = fit_gbt(x, y)
    assert m.importances[0] >= 0.95
    assert m.importances.sum() == pytest.approx(1.0)


def test_gbt_noise_is_chance(rng):
    x = rng.random((4000, 3))
    y = rng.integers(0, 2, size=4000)
    m = fit_gbt(x[:2000], y[:2000])
    assert abs(m.score(x[2000:], y[2000:]) - 0.5) <= 0.05


def test_gbt_single_feature_separable():
    x = np.linspace(0, 1, 200)
    y = (x > 0.37).astype(int)
    assert fit_gbt(x, y).score(x[:, None], y) >= 0.99


def test_gbt_constant_feature_gets_zero_importance(rng):
    x = np.c_[rng.random(500), np.ones(500)]
    m = fit_gbt(x, (x[:, 0] > 0.5).astype(int), GBTConfig(n_trees=10))
    assert m.importances[1] == 0.0


def test_gbt_identical_features_share_importance(rng):
    x = rng.random(1000)
    m = fit_gbt(np.c_[x, x], (x * 3).astype(int), GBTConfig(n_trees=20))
    np.testing.assert_allclose(m.importances, [0.5, 0.5], atol=1e-9)


def test_gbt_column_permutation_permutes_importances(rng):
    x = rng.random((600, 3))
    y = (x[:, 0] + 0.5 * x[:, 2] > 0.8).astype(int)
    cfg = GBTConfig(n_trees=15)
    a = fit_gbt(x, y, cfg).importances
    b = fit_gbt(x[:, [2, 0, 1]], y, cfg).importances
    np.testing.assert_allclose(b, a[[2, 0, 1]], atol=1e-12)


def test_gbt_errors():
    with pytest.raises(DegenerateLabelError):
        fit_gbt(np.random.default_rng(0).random((10, 2)), np.zeros(10))
    with pytest.raises(DataError):
        fit_gbt(np.array([[np.nan], [1.0]]), [0, 1])


# majority vote -----------------------------------------------------------------

def test_majority_vote_rules():
    m = majority_vote([(0, 2), (0, 2), (0, 1), (1, 0), (1, 3), (2, 2)])
    assert m.predict(0) == 2
    assert m.predict(1) == 0
    # unseen index -> global majority (label 2 has three votes)
    assert m.predict(9) == 2


def test_majority_vote_empty():
    with pytest.raises(ArgumentError):
        majority_vote([])


# statistics --------------------------------------------------------------------

@pytest.mark.parametrize("x,y,expected", [([1, 2, 3], [10, 20, 30], 1.0),
                                          ([1, 2, 3], [3, 2, 1], -1.0),
                                          ([1, 1, 2], [1, 2, 3], math.sqrt(3) / 2)])
def test_spearman_examples(x, y, expected):
    assert spearman(x, y) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(-5, 5), st.floats(-10, 10)), min_size=3, max_size=40))
def test_spearman_matches_scipy(pairs):
    x, y = np.array(pairs, dtype=float).T
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        with pytest.raises(DegenerateError):
            spearman(x, y)
    else:
        assert spearman(x, y) == pytest.approx(stats.spearmanr(x, y).statistic, abs=1e-9)


@pytest.mark.parametrize("y,expected", [([1, 1, 2, 2], 1.0), ([1, 2, 1, 2], 0.0),
                                        ([1, 2, 3, 4], 0.8)])
def test_ols_examples(y, expected):
    assert ols_r2([["A", "A", "B", "B"]], y) == pytest.approx(expected, abs=1e-12)


def test_tc_diagonal_is_zero(rng):
    x = rng.standard_normal((1000, 3)) * [1, 2, 3]
    fit = fit_gaussian(x)
    fit = type(fit)(fit.mean, np.diag(np.diag(fit.cov)))
    assert abs(gaussian_tc(fit)) < 1e-9


def test_tc_correlated_pair(rng):
    x = rng.multivariate_normal([0, 0], [[1, 0.5], [0.5, 1]], size=100_000)
    assert abs(gaussian_tc(fit_gaussian(x)) - (-0.5 * math.log(1 - 0.25))) < 0.02


def test_tc_grows_as_duplicate_jitter_shrinks(rng):
    x = rng.random(5000)
    tcs = [gaussian_tc(fit_gaussian(np.c_[x, x + eps * rng.standard_normal(5000)]))
           for eps in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(a < b for a, b in zip(tcs, tcs[1:]))
    assert gaussian_tc(fit_gaussian(np.c_[x, x])) > 5


def test_tc_needs_dimensions():
    with pytest.raises(ArgumentError):
        fit_gaussian(np.zeros((5, 0)))
