import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st

from disentbench import ArgumentError, DegenerateError
from disentbench.analysis import (confusion_thresholds, dendrogram, downstream, evaluation_run,
                                  independent_groups_curve, rank_corr_table, rank_stability,
                                  reliability, score_table, statistical_efficiency,
                                  transfer_protocol, variance_explained)
from disentbench.estimation import FactorCodeMatrix
from disentbench.factors import FactorSpace, OracleEncoder

NOISE2 = OracleEncoder("noise_channels", noise_std=(1.0, 1.0), passthrough=False)
WORKED = np.array([[0.9, 0.1], [0.2, 0.8]])


def rows(values: dict, n_models: int, dataset="d", method=None, hyper=None):
    """Score-table records, one model per index, metrics given as columns."""
    out = []
    for i in range(n_models):
        for name, col in values.items():
            out.append({"encoder_id": f"e{i}", "dataset_id": dataset,
                        "method_label": method[i] if method is not None else "m",
                        "hyperparam_label": hyper[i] if hyper is not None else "h",
                        "seed": 0, "metric_name": name, "n_samples": 100,
                        "value": float(col[i])})
    return out


# score tables ------------------------------------------------------------------

def test_score_table_validation():
    good = rows({"a": [1.0, 2.0]}, 2)
    assert len(score_table(good)) == 2
    with pytest.raises(ArgumentError, match="missing"):
        score_table([{k: v for k, v in good[0].items() if k != "seed"}])
    with pytest.raises(ArgumentError, match="finite"):
        score_table(rows({"a": [np.nan, 1.0]}, 2))
    with pytest.raises(ArgumentError, match="duplicate"):
        score_table(good + good[:1])


# downstream --------------------------------------------------------------------

def test_downstream_identity_and_efficiency(space44):
    r = downstream(space44, OracleEncoder.identity(), (100, 1000, 10000),
                   rng=np.random.default_rng(0))
    assert r.accuracy[1000] >= 0.99
    assert abs(statistical_efficiency(r) - 1.0) <= 0.02


def test_downstream_noise_is_chance_at_every_size(space44):
    r = downstream(space44, NOISE2, (10, 100, 10000), rng=np.random.default_rng(1))
    assert all(abs(a - 0.25) <= 0.05 for a in r.accuracy.values())
    # a chance-level model looks perfectly efficient
    assert abs(statistical_efficiency(r) - 1.0) <= 0.2


def test_downstream_gbt_learner_and_fallback(space44):
    r = downstream(space44, OracleEncoder.identity(), (1, 500), learner="gbt",
                   rng=np.random.default_rng(0))
    assert r.accuracy[500] >= 0.99
    assert (1, 0) in r.fallbacks and (1, 1) in r.fallbacks
    with pytest.raises(ArgumentError):
        downstream(space44, OracleEncoder.identity(), (0,))
    with pytest.raises(ArgumentError):
        downstream(space44, OracleEncoder.identity(), (10,), learner="forest")


def test_efficiency_arithmetic():
    assert statistical_efficiency({100: 0.5, 10000: 1.0}) == 0.5
    with pytest.raises(DegenerateError):
        statistical_efficiency({100: 0.5, 10000: 0.0})
    with pytest.raises(ArgumentError):
        statistical_efficiency({100: 0.5})


# rank correlation --------------------------------------------------------------

def test_rank_corr_copies_and_negations(rng):
    x = rng.standard_normal(30)
    t = score_table(rows({"a": x, "b": x, "c": -x}, 30))
    rc = rank_corr_table(t)
    assert rc.loc["a", "b"] == 1.0 and rc.loc["a", "c"] == -1.0 and rc.loc["a", "a"] == 1.0


def test_rank_corr_independent_columns_are_small(rng):
    t = score_table(rows({"a": rng.random(200), "b": rng.random(200)}, 200))
    assert abs(rank_corr_table(t).loc["a", "b"]) < 0.2


def test_rank_corr_axes(rng):
    x = rng.random(20)
    hyper = [f"h{i}" for i in range(20)]
    recs = rows({"mig": x, "tc_mean": -x, "downstream_100": 2 * x}, 20, hyper=hyper)
    recs += rows({"mig": x}, 20, dataset="d2", hyper=hyper)
    t = score_table(recs)
    assert rank_corr_table(t, "unsupervised_vs_metric").loc["tc_mean", "mig"] == -1.0
    assert rank_corr_table(t, "metric_vs_downstream").loc["mig", "downstream_100"] == 1.0
    assert list(rank_corr_table(t).columns) == ["mig"]
    ds = rank_corr_table(t, "metric_vs_dataset", metric_name="mig")
    assert ds.loc["d", "d2"] == pytest.approx(1.0)
    with pytest.raises(ArgumentError):
        rank_corr_table(t, "metric_vs_dataset")
    with pytest.raises(ArgumentError):
        rank_corr_table(t, "sideways")


def test_rank_corr_missing_cells_are_nan():
    recs = rows({"a": [1, 2, 3]}, 3) + rows({"b": [1, 2, 3]}, 3, dataset="other")
    rc = rank_corr_table(score_table(recs))
    assert np.isnan(rc.loc["a", "b"])


# factor-code graph -------------------------------------------------------------

def test_curve_worked_example():
    c = independent_groups_curve(WORKED, [0.5, 0.15]).set_index("threshold")
    assert c.loc[0.5, "components"] == 2 and c.loc[0.5, "factors_connected"] == 2
    assert c.loc[0.15, "components"] == 1


def test_dendrogram_worked_example():
    dg = dendrogram(WORKED)
    assert dg.merges == ((0.2, (0, 1)),)
    assert dg.pair_thresholds[0, 1] == 0.2


def test_dendrogram_brute_force_agreement(rng):
    m = rng.random((4, 5))
    dg = dendrogram(m)
    # oracle: largest threshold among the matrix entries at which the pair is connected
    for a in range(4):
        for b in range(a + 1, 4):
            best = 0.0
            for t in np.unique(m):
                adj = m >= t
                reach, frontier = {("f", a)}, [("f", a)]
                while frontier:
                    kind, i = frontier.pop()
                    nxt = ([("c", j) for j in np.flatnonzero(adj[i])] if kind == "f"
                           else [("f", j) for j in np.flatnonzero(adj[:, i])])
                    for node in nxt:
                        if node not in reach:
                            reach.add(node)
                            frontier.append(node)
                if ("f", b) in reach:
                    best = max(best, t)
            assert dg.pair_thresholds[a, b] == best


def test_diagonal_matrix_never_merges_at_positive_threshold():
    dg = dendrogram(np.diag([0.9, 0.7, 0.5]))
    assert np.all(dg.pair_thresholds == 0)
    assert all(t == 0 for t, _ in dg.merges)


def test_graph_errors():
    with pytest.raises(DegenerateError):
        dendrogram(np.zeros((2, 2)))
    with pytest.raises(ArgumentError):
        independent_groups_curve(np.array([[-1.0, 0.5]]), [0.5])


def test_confusion():
    assert np.all(confusion_thresholds([dendrogram(np.eye(3)), dendrogram(2 * np.eye(3))]) == 0)
    assert confusion_thresholds([dendrogram(WORKED)])[0, 1] == 0.2
    a = dendrogram(FactorCodeMatrix(WORKED, "MI", ("x", "y")))
    with pytest.raises(ArgumentError):
        confusion_thresholds([a, dendrogram(np.eye(3))])
    with pytest.raises(ArgumentError):
        confusion_thresholds([])


# variance explained ------------------------------------------------------------

def _ve_frame(method, hyper, value):
    return pd.DataFrame({"dataset_id": "d", "metric_name": "m", "method_label": method,
                         "hyperparam_label": hyper, "value": value})


def test_variance_explained_examples(rng):
    method = np.repeat(["A", "B", "C"], 10)
    assert variance_explained(_ve_frame(method, "h", np.repeat([1.0, 2.0, 5.0], 10)))[
        "r2"].iloc[0] == pytest.approx(1.0)
    null = _ve_frame([f"m{i % 6}" for i in range(300)], "h", rng.standard_normal(300))
    assert variance_explained(null)["r2"].iloc[0] < 0.1
    # crossed design: method means equal, cells differ
    m = np.array(["A", "A", "B", "B"] * 5)
    h = np.array(["x", "y", "x", "y"] * 5)
    v = np.where((m == "A") == (h == "x"), 1.0, -1.0)
    t = _ve_frame(m, h, v)
    assert variance_explained(t, "method")["r2"].iloc[0] == pytest.approx(0.0, abs=1e-12)
    assert variance_explained(t, "method_hyperparam")["r2"].iloc[0] == pytest.approx(1.0)


def test_variance_explained_single_group():
    with pytest.raises(DegenerateError):
        variance_explained(_ve_frame(["A"] * 5, "h", np.arange(5.0)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_product_design_explains_at_least_as_much(seed):
    rng = np.random.default_rng(seed)
    t = _ve_frame(rng.choice(["A", "B", "C"], 40), rng.choice(["x", "y"], 40),
                  rng.standard_normal(40))
    if t["method_label"].nunique() < 2:
        return
    assert (variance_explained(t, "method_hyperparam")["r2"].iloc[0]
            >= variance_explained(t, "method")["r2"].iloc[0] - 1e-12)


# transfer ----------------------------------------------------------------------

def _transfer_table(rng, dominant=False):
    recs = []
    for d in ("d0", "d1", "d2"):
        for k in ("m0", "m1"):
            for s in range(4):
                for h in range(5):
                    v = 10.0 if dominant and h == 3 else rng.random()
                    recs.append({"encoder_id": f"h{h}", "dataset_id": d, "method_label": "M",
                                 "hyperparam_label": f"h{h}", "seed": s, "metric_name": k,
                                 "n_samples": 100, "value": v})
    return pd.DataFrame(recs)


def test_transfer_dominant_setting_always_wins(rng):
    t = transfer_protocol(_transfer_table(rng, dominant=True), 2000)
    assert np.all(t.to_numpy() == 1.0)
    assert list(t.index) == ["same_metric", "different_metric"]


def test_transfer_is_invariant_to_monotone_transforms(rng):
    t = _transfer_table(rng)
    a = transfer_protocol(t, 1000, np.random.default_rng(9))
    t2 = t.assign(value=np.exp(3 * t["value"]))
    b = transfer_protocol(t2, 1000, np.random.default_rng(9))
    pd.testing.assert_frame_equal(a, b)


def test_transfer_needs_span(rng):
    t = _transfer_table(rng)
    with pytest.raises(ArgumentError):
        transfer_protocol(t[t["dataset_id"] == "d0"], 100)


# reliability -------------------------------------------------------------------

def test_reliability_identical_seeds_is_one(space5):
    encs = [OracleEncoder.rotation(space5, 0.25, mix=m) for m in np.linspace(0, 1, 10)]
    assert reliability(space5, encs, "mig", 100, same_seed=True) == pytest.approx(1.0)
    out = reliability(space5, encs, ["mig", "irs"], 100, np.random.default_rng(1))
    assert set(out) == {"mig", "irs"}
    with pytest.raises(ArgumentError):
        reliability(space5, encs[:9], "mig", 100)


def test_rank_stability_of_a_run_with_itself(space5):
    encs = [OracleEncoder.rotation(space5, 0.25, mix=m) for m in (0.0, 0.5, 1.0)]
    run = evaluation_run(space5, encs, ["mig", "sap"], 200, 0)
    assert run.shape == (3, 2)
    assert rank_stability(run, run) == {"mig": 1.0, "sap": 1.0}
