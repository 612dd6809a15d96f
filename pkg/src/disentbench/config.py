"""Run configuration: strict JSON schema validation and typed access."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from jsonschema import Draft202012Validator

from .errors import ArgumentError, ConfigError
from .factors import ENCODER_KINDS, FactorSpace, OracleEncoder
from .impossibility import MARGINALS
from .metrics import AGGREGATIONS, ALL_METRICS, EvalBudget

ESTIMATOR_TAGS = ("MI", "GBT", "SVM")
BLEND_NAMES = tuple(f"{e}-{a}" for e in ESTIMATOR_TAGS for a in AGGREGATIONS)
IDENT = r"^[A-Za-z0-9_.-]+$"

_INTS = {"type": "array", "items": {"type": "integer", "minimum": 0}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["seed"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "datasets": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["id", "cardinalities"],
                "properties": {
                    "id": {"type": "string", "pattern": IDENT},
                    "cardinalities": {"type": "array", "minItems": 2,
                                      "items": {"type": "integer", "minimum": 2}},
                    "names": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "encoders": {"type": "array", "items": {"$ref": "#/$defs/encoder"}},
        "external": {
            "type": "array",
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["id", "factors_csv", "codes_csv"],
                "properties": {
                    "id": {"type": "string", "pattern": IDENT},
                    "factors_csv": {"type": "string"},
                    "codes_csv": {"type": "string"},
                    "method": {"type": "string"},
                    "hyperparam": {"type": ["string", "number"]},
                },
            },
        },
        "seeds": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        "metrics": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "names": {"type": "array", "items": {"enum": list(ALL_METRICS) + list(BLEND_NAMES)}},
                "blends": {"type": "boolean"},
                "unsupervised": {"type": "boolean"},
                "budget": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "n_train": {"type": "integer", "minimum": 1},
                        "n_test": {"type": "integer", "minimum": 1},
                        "batch": {"type": "integer", "minimum": 1},
                        "bins": {"type": "integer", "minimum": 1},
                        "variance_threshold": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "analyses": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "rank_correlation": {"type": "boolean"},
                "dendrograms": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "estimators": {"type": "array", "items": {"enum": list(ESTIMATOR_TAGS)}},
                        "thresholds": {"type": "integer", "minimum": 2},
                    },
                },
                "variance_explained": {"type": "boolean"},
                "transfer": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"trials": {"type": "integer", "minimum": 1}},
                },
                "downstream": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "sizes": {"type": "array", "minItems": 1,
                                  "items": {"type": "integer", "minimum": 1}},
                        "learner": {"enum": ["logistic_cv", "gbt"]},
                        "n_test": {"type": "integer", "minimum": 1},
                    },
                },
                "reliability": {
                    "type": "object", "additionalProperties": False,
                    "required": ["n"],
                    "properties": {
                        "n": {"type": "array", "minItems": 1,
                              "items": {"type": "integer", "minimum": 2}},
                        "metrics": {"type": "array",
                                    "items": {"enum": list(ALL_METRICS) + list(BLEND_NAMES)}},
                        "dataset": {"type": "string"},
                    },
                },
            },
        },
        "generate": {
            "type": "object", "additionalProperties": False,
            "properties": {"n": {"type": "integer", "minimum": 1}},
        },
        "output_dir": {"type": "string"},
    },
    "$defs": {
        "encoder": {
            "type": "object", "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "id": {"type": "string", "pattern": IDENT},
                "kind": {"enum": list(ENCODER_KINDS)},
                "method": {"type": "string"},
                "hyperparam": {"type": ["string", "number"]},
                "sigma": {"oneOf": [{"type": "number", "minimum": 0},
                                    {"type": "array", "items": {"type": "number", "minimum": 0}}]},
                "factors": _INTS,
                "permutation": _INTS,
                "scales": {"type": "array", "items": {"type": "number"}},
                "groups": {"type": "array",
                           "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                     "items": {"type": "integer", "minimum": 0}}},
                "passthrough": {"type": "boolean"},
                "copies": _INTS,
                "noise_std": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "n_dims": {"type": "integer", "minimum": 1},
                "value": {"type": "number"},
                "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                "marginal": {"enum": list(MARGINALS)},
                "mix": {"type": "number", "minimum": 0, "maximum": 1},
                "parts": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/encoder"}},
            },
        },
    },
}

_VALIDATOR = Draft202012Validator(SCHEMA)


@dataclass(frozen=True)
class EncoderSpec:
    id: str
    method: str
    hyperparam: str
    spec: dict = field(compare=False)

    def build(self, space: FactorSpace) -> OracleEncoder:
        return build_encoder(self.spec, space, self.id)


@dataclass(frozen=True)
class ExternalSpec:
    id: str
    factors_csv: Path
    codes_csv: Path
    method: str
    hyperparam: str


@dataclass(frozen=True)
class RunConfig:
    seed: int
    datasets: tuple[tuple[str, FactorSpace], ...]
    encoders: tuple[EncoderSpec, ...]
    external: tuple[ExternalSpec, ...]
    seeds: tuple[int, ...]
    metric_names: tuple[str, ...]
    unsupervised: bool
    budget: EvalBudget
    analyses: dict = field(compare=False)
    generate_n: int
    output_dir: str | None
    raw: dict = field(compare=False)
    base_dir: Path | None = field(default=None, compare=False)

    def serialized(self) -> bytes:
        """Canonical JSON bytes of the effective configuration."""
        return (json.dumps(self.raw, indent=2, sort_keys=True) + "\n").encode("utf-8")

    def sha256(self) -> str:
        return hashlib.sha256(self.serialized()).hexdigest()

    def dataset(self, dataset_id: str) -> FactorSpace:
        for name, space in self.datasets:
            if name == dataset_id:
                return space
        raise ConfigError(f"unknown dataset {dataset_id!r}")

    def with_seed(self, seed: int) -> "RunConfig":
        return load_config_dict({**self.raw, "seed": int(seed)}, self.base_dir)


def _path(err) -> str:
    out = "config"
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def build_encoder(spec: dict, space: FactorSpace, name: str = "") -> OracleEncoder:
    """Oracle encoder from a config entry; ``alpha``/``marginal`` feed the entangler."""
    kw = {k: v for k, v in spec.items() if k not in ("id", "method", "hyperparam")}
    kind = kw.pop("kind")
    for key in ("factors", "permutation", "copies"):
        if key in kw:
            kw[key] = tuple(kw[key])
    for key in ("scales", "noise_std"):
        if key in kw:
            kw[key] = tuple(float(v) for v in kw[key])
    if isinstance(kw.get("sigma"), list):
        kw["sigma"] = tuple(kw["sigma"])
    if "groups" in kw:
        kw["groups"] = tuple(tuple(g) for g in kw["groups"])
    if "parts" in kw:
        kw["parts"] = tuple(build_encoder(p, space) for p in kw["parts"])
    alpha = kw.pop("alpha", None)
    marginal = kw.pop("marginal", None)
    if kind == "rotation":
        enc = OracleEncoder.rotation(space, 0.25 if alpha is None else alpha,
                                     marginal or "uniform01", name=name, **kw)
    else:
        if alpha is not None or marginal is not None:
            raise ArgumentError("alpha and marginal only apply to rotation encoders")
        enc = OracleEncoder(kind, name=name, **kw)
    enc.check(space)
    return enc


def load_config_dict(raw: dict, base_dir: Path | None) -> RunConfig:
    """Validate a parsed config; relative CSV paths resolve against ``base_dir``."""
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        lines = [f"{_path(e)}: {e.message}" for e in errors]
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(lines))
    datasets = []
    for i, ds in enumerate(raw.get("datasets", [])):
        names = ds.get("names")
        cards = ds["cardinalities"]
        if names is not None and len(names) != len(cards):
            raise ConfigError(f"config.datasets[{i}].names: expected {len(cards)} names")
        try:
            space = FactorSpace(tuple(zip(names or [f"factor_{k}" for k in range(len(cards))],
                                          cards)))
        except ArgumentError as exc:
            raise ConfigError(f"config.datasets[{i}]: {exc}") from exc
        datasets.append((ds["id"], space))
    if len({d for d, _ in datasets}) != len(datasets):
        raise ConfigError("config.datasets: duplicate dataset ids")

    encoders = []
    for i, spec in enumerate(raw.get("encoders", [])):
        eid = spec.get("id", f"encoder_{i}")
        for dsid, space in datasets:
            try:
                build_encoder(spec, space, eid)
            except ArgumentError as exc:
                raise ConfigError(f"config.encoders[{i}] on dataset {dsid!r}: {exc}") from exc
        hp = spec.get("hyperparam", spec.get("alpha", ""))
        encoders.append(EncoderSpec(eid, spec.get("method", spec["kind"]), str(hp), dict(spec)))
    external = []
    for i, ext in enumerate(raw.get("external", [])):
        paths = []
        for key in ("factors_csv", "codes_csv"):
            p = Path(ext[key])
            if not p.is_absolute() and base_dir is not None:
                p = base_dir / p
            if not p.is_file():
                raise ConfigError(f"config.external[{i}].{key}: file not found: {p}")
            paths.append(p)
        external.append(ExternalSpec(ext["id"], paths[0], paths[1], ext.get("method", "external"),
                                     str(ext.get("hyperparam", ""))))
    ids = [e.id for e in encoders] + [e.id for e in external]
    if len(set(ids)) != len(ids):
        raise ConfigError("config: encoder and external ids must be unique")
    if not encoders and not external:
        raise ConfigError("config: need at least one encoder or external pair")
    if encoders and not datasets:
        raise ConfigError("config.datasets: oracle encoders need at least one dataset")

    metrics = raw.get("metrics", {})
    names = list(metrics.get("names", ALL_METRICS))
    if metrics.get("blends", False):
        names += [b for b in BLEND_NAMES if b not in names]
    if len(set(names)) != len(names):
        raise ConfigError("config.metrics.names: duplicate metric names")
    try:
        budget = EvalBudget(**metrics.get("budget", {}))
    except ArgumentError as exc:
        raise ConfigError(f"config.metrics.budget: {exc}") from exc

    analyses = raw.get("analyses", {})
    rel = analyses.get("reliability")
    if rel is not None:
        if len(encoders) < 10:
            raise ConfigError("config.analyses.reliability: needs at least 10 encoders")
        if "dataset" in rel and rel["dataset"] not in {d for d, _ in datasets}:
            raise ConfigError(f"config.analyses.reliability.dataset: unknown {rel['dataset']!r}")
    seeds = tuple(raw.get("seeds", [0]))
    if len(set(seeds)) != len(seeds):
        raise ConfigError("config.seeds: duplicate seeds")
    return RunConfig(
        seed=raw["seed"], datasets=tuple(datasets), encoders=tuple(encoders),
        external=tuple(external), seeds=seeds, metric_names=tuple(names),
        unsupervised=metrics.get("unsupervised", True), budget=budget, analyses=analyses,
        generate_n=raw.get("generate", {}).get("n", 1000), output_dir=raw.get("output_dir"),
        raw=raw, base_dir=base_dir)


def parse_config(path) -> RunConfig:
    """Read and validate a JSON run configuration file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
                          f"{exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return load_config_dict(raw, path.parent.resolve())
