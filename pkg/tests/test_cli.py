import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from disentbench.cli import main
from disentbench.factors import CodeBatch, FactorBatch, FactorSpace
from disentbench.io import write_codes_csv, write_factors_csv

SMALL = {
    "seed": 7,
    "datasets": [{"id": "two", "cardinalities": [3, 4]}],
    "encoders": [
        {"id": "identity", "kind": "identity"},
        {"id": "rotation", "kind": "rotation", "alpha": 0.25},
    ],
    "seeds": [0],
    "metrics": {"names": ["mig", "sap", "dci_d", "irs"],
                "budget": {"n_train": 300, "n_test": 150, "batch": 16}},
    "analyses": {"rank_correlation": True, "dendrograms": {"estimators": ["MI"]}},
    "generate": {"n": 50},
}


def _config(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


def test_run_writes_a_complete_bundle(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(_config(tmp_path, SMALL)), "--out", str(out)]) == 0
    scores = pd.read_csv(out / "scores.csv", keep_default_na=False)
    supervised = scores[~scores["metric_name"].str.startswith(("tc_", "avg_mi"))]
    assert len(supervised) == 2 * 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["master_seed"] == 7 and not manifest["failures"]
    assert (out / "data" / "two" / "rotation" / "factors.csv").is_file()
    assert any((out / "figures").rglob("*.svg"))
    assert (out / "analyses" / "dendrograms").is_dir()


def test_runs_are_byte_identical_across_job_counts(tmp_path):
    cfg = str(_config(tmp_path, SMALL))
    main(["evaluate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["evaluate", "--config", cfg, "--out", str(tmp_path / "b"), "--jobs", "2"])
    assert (tmp_path / "a" / "scores.csv").read_bytes() == (tmp_path / "b" / "scores.csv").read_bytes()


def test_all_metrics_and_blends_per_encoder(tmp_path):
    raw = {**SMALL, "encoders": SMALL["encoders"] + [
        {"id": "merge", "kind": "merge", "groups": [[0, 1]]},
        {"id": "duplicate", "kind": "duplicate", "copies": [0]}],
        "metrics": {"blends": True, "unsupervised": False, "budget": SMALL["metrics"]["budget"]},
        "analyses": {}}
    out = tmp_path / "out"
    code = main(["evaluate", "--config", str(_config(tmp_path, raw)), "--out", str(out)])
    scores = pd.read_csv(out / "scores.csv", keep_default_na=False)
    manifest = json.loads((out / "manifest.json").read_text())
    # the merge encoder has a single code dimension, so MIG and SAP are undefined for it
    assert len(scores) + len(manifest["failures"]) == 4 * (9 + 15)
    assert code == (4 if manifest["failures"] else 0)


def test_seed_override_changes_scores(tmp_path):
    cfg = str(_config(tmp_path, SMALL))
    main(["evaluate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["evaluate", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "8"])
    assert (tmp_path / "a" / "scores.csv").read_bytes() != (tmp_path / "b" / "scores.csv").read_bytes()
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["master_seed"] == 8


def test_partial_failure_keeps_other_rows(tmp_path, capsys):
    raw = {**SMALL, "encoders": SMALL["encoders"] + [{"id": "dead", "kind": "collapsed",
                                                      "n_dims": 2}],
           "metrics": {**SMALL["metrics"], "names": ["factor_vae", "mig"]}}
    out = tmp_path / "out"
    assert main(["evaluate", "--config", str(_config(tmp_path, raw)), "--out", str(out)]) == 4
    scores = pd.read_csv(out / "scores.csv", keep_default_na=False)
    fvae = scores[scores["metric_name"] == "factor_vae"]
    assert set(fvae["encoder_id"]) == {"identity", "rotation"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert any("dead" in f["task"] and "collapsed" in f["error"] for f in manifest["failures"])
    assert "failed:" in capsys.readouterr().err


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["run", "--config", str(_config(tmp_path, {**SMALL, "metrcs": {}})),
                 "--out", str(tmp_path / "o")]) == 2
    assert "metrcs" in capsys.readouterr().err


def test_data_error_exit_code(tmp_path):
    space = FactorSpace.from_cardinalities([2, 2])
    write_factors_csv(FactorBatch(np.c_[np.arange(10) % 2, np.arange(10) // 5], space),
                      tmp_path / "f.csv")
    write_codes_csv(CodeBatch(np.zeros((9, 2))), tmp_path / "c.csv")
    raw = {"seed": 1, "external": [{"id": "ext", "factors_csv": "f.csv", "codes_csv": "c.csv"}],
           "metrics": {"names": ["mig"]}}
    assert main(["evaluate", "--config", str(_config(tmp_path, raw)),
                 "--out", str(tmp_path / "o")]) == 3


def test_external_data_is_scored(tmp_path):
    rng = np.random.default_rng(0)
    space = FactorSpace.from_cardinalities([3, 4])
    z = np.c_[rng.integers(0, 3, 600), rng.integers(0, 4, 600)]
    write_factors_csv(FactorBatch(z, space), tmp_path / "f.csv")
    write_codes_csv(CodeBatch((z + 0.5) / [3, 4]), tmp_path / "c.csv")
    raw = {"seed": 1, "external": [{"id": "ext", "factors_csv": "f.csv", "codes_csv": "c.csv"}],
           "metrics": {"names": ["mig", "beta_vae"], "unsupervised": False}}
    out = tmp_path / "o"
    assert main(["evaluate", "--config", str(_config(tmp_path, raw)), "--out", str(out)]) == 4
    scores = pd.read_csv(out / "scores.csv", keep_default_na=False)
    assert scores.loc[scores["metric_name"] == "mig", "value"].iloc[0] > 0.9


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("DISENTBENCH_OUT", str(tmp_path / "env"))
    raw = {**SMALL, "metrics": {**SMALL["metrics"], "names": ["mig"]}}
    assert main(["generate", "--config", str(_config(tmp_path, raw))]) == 0
    assert (tmp_path / "env" / "data").is_dir()


def test_console_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "disentbench.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for verb in ("generate", "evaluate", "analyze", "report", "run"):
        assert verb in proc.stdout


def test_bad_jobs_value(tmp_path):
    assert main(["run", "--config", str(_config(tmp_path, SMALL)), "--jobs", "0",
                 "--out", str(tmp_path / "o")]) == 2
