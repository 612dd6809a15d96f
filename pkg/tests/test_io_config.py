import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from disentbench import ConfigError, DataError
from disentbench.config import BLEND_NAMES, load_config_dict, parse_config
from disentbench.estimation import FactorCodeMatrix
from disentbench.factors import CodeBatch, FactorBatch, FactorSpace
from disentbench.io import (IngestWarning, ingest_external, read_codes_csv, read_factors_csv,
                            read_matrix, read_score_table, write_codes_csv, write_factors_csv,
                            write_matrix, write_score_table)
from disentbench.metrics import ALL_METRICS

MINIMAL = {"seed": 1, "datasets": [{"id": "a", "cardinalities": [2, 3]}],
           "encoders": [{"kind": "identity"}]}


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# CSV -----------------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 20), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_codes_round_trip_bit_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("codes") / "c.csv"
    write_codes_csv(CodeBatch(values), path)
    back = read_codes_csv(path).values
    np.testing.assert_array_equal(back, values)


def test_factor_round_trip(tmp_path, space5):
    z = space5.enumerate()[::7]
    write_factors_csv(FactorBatch(z, space5), tmp_path / "f.csv")
    np.testing.assert_array_equal(read_factors_csv(tmp_path / "f.csv", space5).values, z)


def test_ingest_matched_and_mismatched(tmp_path):
    rng = np.random.default_rng(0)
    space = FactorSpace.from_cardinalities([3, 4])
    z = np.c_[np.arange(100) % 3, np.arange(100) % 4]
    write_factors_csv(FactorBatch(z, space), tmp_path / "f.csv")
    write_codes_csv(CodeBatch(rng.random((100, 2))), tmp_path / "c.csv")
    f, c = ingest_external(tmp_path / "f.csv", tmp_path / "c.csv")
    assert len(f) == len(c) == 100
    write_codes_csv(CodeBatch(rng.random((99, 2))), tmp_path / "c99.csv")
    with pytest.raises(DataError, match="row mismatch"):
        ingest_external(tmp_path / "f.csv", tmp_path / "c99.csv")


def test_gap_in_factor_values_warns(tmp_path):
    p = _write(tmp_path, "f.csv", "factor_0,factor_1\n0,1\n2,0\n0,1\n")
    records = []
    with pytest.warns(IngestWarning):
        f = read_factors_csv(p, warnings_out=records)
    assert f.space.cardinalities.tolist() == [3, 2]
    assert records[0].column == "factor_0" and "[1]" in records[0].message


@pytest.mark.parametrize("body,match", [("0,1\n1.5,0\n", "row 3.*not an integer"),
                                        ("0,1\n-1,0\n", "row 3.*negative"),
                                        ("0,1\n1\n", "row 3 has 1 fields")])
def test_bad_factor_files(tmp_path, body, match):
    p = _write(tmp_path, "f.csv", "factor_0,factor_1\n" + body)
    with pytest.raises(DataError, match=match):
        read_factors_csv(p)


@pytest.mark.parametrize("cell", ["nan", "inf", "abc"])
def test_bad_code_files(tmp_path, cell):
    p = _write(tmp_path, "c.csv", f"code_0\n0.5\n{cell}\n")
    with pytest.raises(DataError, match="row 3"):
        read_codes_csv(p)


def test_bad_header(tmp_path):
    with pytest.raises(DataError, match="header"):
        read_codes_csv(_write(tmp_path, "c.csv", "x,y\n1,2\n"))


def test_matrix_round_trip(tmp_path):
    m = FactorCodeMatrix(np.array([[0.1, 1 / 3], [2 / 7, 0.0]]), "GBT", ("a", "b"),
                         ("c0", "c1"), row_accuracy=np.array([0.9, 0.8]))
    csv_path, side = write_matrix(m, tmp_path / "m.csv")
    back = read_matrix(csv_path)
    np.testing.assert_array_equal(back.values, m.values)
    assert back.factor_names == ("a", "b") and back.estimator == "GBT"
    np.testing.assert_array_equal(back.row_accuracy, m.row_accuracy)
    assert json.loads(side.read_text())["estimator"] == "GBT"


def test_score_table_round_trip(tmp_path):
    df = pd.DataFrame({"encoder_id": ["e2", "e1"], "dataset_id": ["d", "d"],
                       "method_label": ["m", "m"], "hyperparam_label": ["", "0.25"],
                       "seed": [0, 0], "metric_name": ["mig", "mig"], "n_samples": [10, 10],
                       "value": [0.1, 1 / 3]})
    write_score_table(df, tmp_path / "s.csv")
    back = read_score_table(tmp_path / "s.csv")
    assert back["encoder_id"].tolist() == ["e1", "e2"]
    assert back["value"].tolist() == [1 / 3, 0.1]
    assert back["hyperparam_label"].tolist() == ["0.25", ""]


# config --------------------------------------------------------------------------

def test_minimal_config():
    cfg = load_config_dict(MINIMAL, None)
    assert cfg.seed == 1 and cfg.metric_names == ALL_METRICS
    assert cfg.encoders[0].id == "encoder_0"


def test_blends_append_all_fifteen():
    cfg = load_config_dict({**MINIMAL, "metrics": {"names": ["mig"], "blends": True}}, None)
    assert cfg.metric_names == ("mig",) + BLEND_NAMES


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="metrcs"):
        load_config_dict({**MINIMAL, "metrcs": {}}, None)


def test_alpha_out_of_range_has_key_path():
    raw = {**MINIMAL, "encoders": [{"kind": "identity"}, {"kind": "rotation", "alpha": 0.7}]}
    with pytest.raises(ConfigError, match=r"config\.encoders\[1\]\.alpha"):
        load_config_dict(raw, None)


@pytest.mark.parametrize("raw,match", [
    ({"datasets": MINIMAL["datasets"], "encoders": [{"kind": "identity"}]}, "seed"),
    ({**MINIMAL, "encoders": []}, "at least one"),
    ({**MINIMAL, "encoders": [{"kind": "identity", "factors": [5]}]}, r"encoders\[0\]"),
    ({**MINIMAL, "seeds": [1, 1]}, "duplicate"),
    ({**MINIMAL, "external": [{"id": "x", "factors_csv": "nope.csv",
                               "codes_csv": "nope.csv"}]}, "not found"),
])
def test_config_errors(raw, match):
    with pytest.raises(ConfigError, match=match):
        load_config_dict(raw, None)


def test_parse_config_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="JSON|json"):
        parse_config(_write(tmp_path, "bad.json", "{seed: 1"))
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")
    cfg = parse_config(_write(tmp_path, "ok.json", json.dumps(MINIMAL)))
    assert cfg.with_seed(9).seed == 9
    assert cfg.sha256() == parse_config(tmp_path / "ok.json").sha256()
