"""Deterministic orchestration of generate / evaluate / analyze / report.

Every unit of work is a *task* identified by a string id.  Its random
stream is derived from ``(master seed, task id)`` alone, so results do not
depend on scheduling, on ``--jobs`` or on which other tasks exist.  Task
outputs are merged and sorted before anything is written.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .analysis import (SCORE_COLUMNS, confusion_thresholds, dendrogram, downstream,
                       independent_groups_curve, rank_corr_table, reliability, score_table,
                       statistical_efficiency, transfer_protocol, variance_explained)
from .config import RunConfig
from .errors import DataError, DisentError
from .estimation import scores_from_codes, unsupervised_scores
from .factors import encode_both, sample_factors
from .io import (ingest_external, read_matrix, read_score_table, write_codes_csv,
                 write_factors_csv, write_matrix, write_score_table)
from .metrics import evaluate, evaluate_batches
from .report import render_report
from .seeding import task_rng, task_seed

SCORES = "scores.csv"
MANIFEST = "manifest.json"


@dataclass(frozen=True)
class Task:
    dataset_id: str
    encoder_id: str
    seed: int
    external: bool = False

    @property
    def id(self) -> str:
        return f"{self.dataset_id}/{self.encoder_id}/seed{self.seed}"


@dataclass
class TaskResult:
    task: Task
    seed: int
    records: list = field(default_factory=list)
    matrices: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def plan_tasks(cfg: RunConfig) -> list[Task]:
    tasks = [Task(ds, e.id, s) for ds, _ in cfg.datasets for e in cfg.encoders for s in cfg.seeds]
    tasks += [Task(f"external-{x.id}", x.id, cfg.seeds[0], external=True) for x in cfg.external]
    return sorted(tasks, key=lambda t: t.id)


def _record(task, method, hyperparam, metric, n, value):
    return {"encoder_id": task.encoder_id, "dataset_id": task.dataset_id,
            "method_label": method, "hyperparam_label": hyperparam, "seed": task.seed,
            "metric_name": metric, "n_samples": int(n), "value": float(value)}


def _failure(task, stage, message):
    return {"task": task.id, "stage": stage, "error": message}


def run_task(cfg: RunConfig, task: Task) -> TaskResult:
    """Evaluate every configured metric (plus extras) for one task."""
    seed = task_seed(cfg.seed, task.id)
    res = TaskResult(task, seed)
    rng = np.random.default_rng(seed)
    if task.external:
        ext = next(x for x in cfg.external if x.id == task.encoder_id)
        method, hp = ext.method, ext.hyperparam
        warn: list = []
        factors, codes = ingest_external(ext.factors_csv, ext.codes_csv, warn)
        res.warnings += [w.to_dict() for w in warn]
        results, matrices = evaluate_batches(factors, codes, cfg.metric_names, cfg.budget,
                                             task.seed, return_matrices=True)
        space, encoder = factors.space, None
    else:
        spec = next(e for e in cfg.encoders if e.id == task.encoder_id)
        method, hp = spec.method, spec.hyperparam
        space = cfg.dataset(task.dataset_id)
        encoder = spec.build(space)
        results, matrices = evaluate(space, encoder, cfg.metric_names, cfg.budget, rng,
                                     task.seed, return_matrices=True)
    res.matrices = matrices
    for r in results:
        if r.ok:
            res.records.append(_record(task, method, hp, r.metric, r.n_samples, r.value))
        else:
            res.failures.append(_failure(task, r.metric, r.error))

    if cfg.unsupervised:
        try:
            if encoder is None:
                scores = {k: v for k, v in scores_from_codes(codes, codes, cfg.budget.bins)
                          .as_dict().items() if k.endswith("_mean")}
            else:
                scores = unsupervised_scores(encoder, space, cfg.budget.n_train,
                                             task_rng(seed, "unsupervised"),
                                             cfg.budget.bins).as_dict()
            for name, value in scores.items():
                res.records.append(_record(task, method, hp, name, cfg.budget.n_train, value))
        except DisentError as exc:
            res.failures.append(_failure(task, "unsupervised", f"{type(exc).__name__}: {exc}"))

    ds_cfg = cfg.analyses.get("downstream")
    if ds_cfg is not None and encoder is not None:
        sizes = ds_cfg.get("sizes", [10, 100, 1000, 10000])
        try:
            out = downstream(space, encoder, sizes, ds_cfg.get("learner", "logistic_cv"),
                             task_rng(seed, "downstream"), ds_cfg.get("n_test", 5000))
            for size, acc in out.accuracy.items():
                res.records.append(_record(task, method, hp, f"downstream_{size}", size, acc))
            for size, k in out.fallbacks:
                res.warnings.append({"source": task.id, "column": f"factor_{k}",
                                     "message": f"single-class training set at size {size}; "
                                                "majority prediction used"})
            if 100 in out.accuracy and 10000 in out.accuracy:
                res.records.append(_record(task, method, hp, "efficiency", 10000,
                                           statistical_efficiency(out)))
        except DisentError as exc:
            res.failures.append(_failure(task, "downstream", f"{type(exc).__name__}: {exc}"))
    return res


def _run_one(args):
    cfg, task = args
    try:
        return run_task(cfg, task)
    except DataError:
        raise
    except DisentError as exc:
        res = TaskResult(task, task_seed(cfg.seed, task.id))
        res.failures.append(_failure(task, "task", f"{type(exc).__name__}: {exc}"))
        return res


def execute(cfg: RunConfig, jobs: int = 1) -> list[TaskResult]:
    """Run every planned task; results come back in task-id order."""
    tasks = plan_tasks(cfg)
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_one((cfg, t)) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_run_one, [(cfg, t) for t in tasks]))


# bundle -----------------------------------------------------------------------

def _matrix_path(out: Path, task: Task, est: str) -> Path:
    return out / "matrices" / task.dataset_id / task.encoder_id / f"seed{task.seed}_{est}.csv"


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_manifest(out: Path) -> dict:
    p = out / MANIFEST
    return json.loads(p.read_text(encoding="utf-8")) if p.is_file() else {}


def _save_manifest(out: Path, cfg: RunConfig, updates: dict) -> dict:
    man = _load_manifest(out)
    man.update({"tool": "disentbench", "version": __version__, "config_sha256": cfg.sha256(),
                "master_seed": cfg.seed})
    for key in ("failures", "warnings"):
        if key in updates:
            stage = updates.get("stage")
            kept = [f for f in man.get(key, []) if f.get("phase") != stage]
            man[key] = kept + [{**f, "phase": stage} for f in updates[key]]
    for key, value in updates.items():
        if key not in ("failures", "warnings", "stage"):
            man[key] = value
    man["created"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    _write_json(out / MANIFEST, man)
    (out / "config.json").write_bytes(cfg.serialized())
    return man


def generate(cfg: RunConfig, out: Path) -> list[Path]:
    """Write factor and code CSVs for every (dataset, oracle encoder)."""
    written = []
    seeds = {}
    for ds, space in cfg.datasets:
        for spec in cfg.encoders:
            tid = f"generate/{ds}/{spec.id}"
            seed = task_seed(cfg.seed, tid)
            seeds[tid] = str(seed)
            rng = np.random.default_rng(seed)
            encoder = spec.build(space)
            factors = sample_factors(space, cfg.generate_n, rng)
            mean, sampled = encode_both(encoder, factors, rng)
            base = out / "data" / ds / spec.id
            written += [write_factors_csv(factors, base / "factors.csv"),
                        write_codes_csv(mean, base / "codes_mean.csv"),
                        write_codes_csv(sampled, base / "codes_sampled.csv")]
    _save_manifest(out, cfg, {"generate_seeds": seeds})
    return written


def evaluate_stage(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    """Score table, factor-code matrices and the manifest's task section."""
    results = execute(cfg, jobs)
    records, failures, warns, seeds = [], [], [], {}
    for res in results:
        records += res.records
        failures += res.failures
        warns += res.warnings
        seeds[res.task.id] = str(res.seed)
        for est, m in sorted(res.matrices.items()):
            write_matrix(m, _matrix_path(out, res.task, est))
    table = score_table(records) if records else pd.DataFrame(columns=SCORE_COLUMNS)
    write_score_table(table, out / SCORES)
    return _save_manifest(out, cfg, {"stage": "evaluate", "task_seeds": seeds,
                                     "failures": failures, "warnings": warns})


def _tasks_from_matrices(out: Path):
    root = out / "matrices"
    for path in sorted(root.glob("*/*/seed*_*.csv")) if root.is_dir() else []:
        seed_part, est = path.stem.split("_", 1)
        yield path.parent.parent.name, path.parent.name, int(seed_part[4:]), est, path


def _write_frame(df: pd.DataFrame, path: Path, index: bool = True) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=index, float_format="%.17g", lineterminator="\n", na_rep="")
    return path


def analyze(cfg: RunConfig, out: Path) -> dict:
    """Study-level analyses over an evaluated bundle."""
    an = cfg.analyses
    adir = out / "analyses"
    failures = []

    def attempt(stage, fn):
        try:
            fn()
        except DisentError as exc:
            failures.append({"task": "analysis", "stage": stage,
                             "error": f"{type(exc).__name__}: {exc}"})

    table = read_score_table(out / SCORES)
    datasets = sorted(table["dataset_id"].unique())

    if an.get("rank_correlation"):
        def rank():
            for ds in datasets:
                for axis in ("metric_vs_metric", "unsupervised_vs_metric", "metric_vs_downstream"):
                    m = rank_corr_table(table, axis, dataset_id=ds)
                    if m.size:
                        _write_frame(m, adir / f"rankcorr_{axis}_{ds}.csv")
            if len(datasets) > 1:
                for metric in sorted(table["metric_name"].unique()):
                    m = rank_corr_table(table, "metric_vs_dataset", metric_name=metric)
                    _write_frame(m, adir / f"rankcorr_metric_vs_dataset_{metric}.csv")
        attempt("rank_correlation", rank)

    dg_cfg = an.get("dendrograms")
    if dg_cfg is not None:
        ests = set(dg_cfg.get("estimators", ["GBT"]))
        grid = np.linspace(0.0, 1.0, dg_cfg.get("thresholds", 21))

        def dendros():
            groups: dict = {}
            for ds, enc, seed, est, path in _tasks_from_matrices(out):
                if est not in ests:
                    continue
                m = read_matrix(path)
                try:
                    dg = dendrogram(m)
                except DisentError as exc:
                    failures.append({"task": f"{ds}/{enc}/seed{seed}", "stage": f"dendrogram_{est}",
                                     "error": f"{type(exc).__name__}: {exc}"})
                    continue
                stem = f"{ds}_{enc}_seed{seed}_{est}"
                merges = pd.DataFrame([{"threshold": t, "factor_a": m.factor_names[a],
                                        "factor_b": m.factor_names[b]}
                                       for t, (a, b) in dg.merges],
                                      columns=["threshold", "factor_a", "factor_b"])
                _write_frame(merges, adir / "dendrograms" / f"{stem}.csv", index=False)
                curve = independent_groups_curve(m, grid)
                _write_frame(curve, adir / "curves" / f"{stem}.csv", index=False)
                groups.setdefault((ds, est), []).append(dg)
            for (ds, est), dgs in sorted(groups.items()):
                conf = confusion_thresholds(dgs)
                names = list(dgs[0].factor_names)
                _write_frame(pd.DataFrame(conf, index=names, columns=names),
                             adir / f"confusion_{ds}_{est}.csv")
        attempt("dendrograms", dendros)

    if an.get("variance_explained"):
        def ve():
            for design in ("method", "method_hyperparam"):
                _write_frame(variance_explained(table, design),
                             adir / f"variance_explained_{design}.csv", index=False)
        attempt("variance_explained", ve)

    if "transfer" in an:
        def transfer():
            sub = table[~table["metric_name"].str.startswith(("downstream", "efficiency"))]
            probs = transfer_protocol(sub, an["transfer"].get("trials", 10000),
                                      task_rng(cfg.seed, "transfer"))
            _write_frame(probs, adir / "transfer.csv")
        attempt("transfer", transfer)

    rel = an.get("reliability")
    if rel is not None:
        def rel_fn():
            ds = rel.get("dataset", cfg.datasets[0][0])
            space = cfg.dataset(ds)
            encoders = [e.build(space) for e in cfg.encoders]
            metrics = rel.get("metrics", list(cfg.metric_names))
            rows = []
            for n in rel["n"]:
                rho = reliability(space, encoders, metrics, n, task_rng(cfg.seed, "reliability", n))
                rows += [{"dataset_id": ds, "n": n, "metric_name": k, "spearman": v}
                         for k, v in sorted(rho.items())]
            _write_frame(pd.DataFrame(rows), adir / "reliability.csv", index=False)
        attempt("reliability", rel_fn)

    return _save_manifest(out, cfg, {"stage": "analyze", "failures": failures})


def report(cfg: RunConfig, out: Path) -> dict:
    rep = render_report(out)
    return _save_manifest(out, cfg, {"stage": "report", "failures": [
        {"task": "report", "stage": "report", "error": f"missing artifact: {m}"}
        for m in rep["missing"]]})


def run(cfg: RunConfig, out: Path, jobs: int = 1) -> dict:
    """generate, evaluate, analyze and report in sequence."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.encoders:
        generate(cfg, out)
    evaluate_stage(cfg, out, jobs)
    analyze(cfg, out)
    return report(cfg, out)

