"""CSV and JSON persistence for batches, matrices and score tables.

All files are UTF-8 with a header row, comma separators and ``\\n`` line
endings.  Floats are written with 17 significant digits so that reading a
file back reproduces every value bit for bit.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .analysis import score_table
from .errors import DataError
from .estimation import FactorCodeMatrix
from .factors import CodeBatch, FactorBatch, FactorSpace


class IngestWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WarningRecord:
    source: str
    column: str
    message: str

    def to_dict(self) -> dict:
        return {"source": self.source, "column": self.column, "message": self.message}


def fmt_float(x: float) -> str:
    return "%.17g" % x


def _write_rows(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_factors_csv(batch: FactorBatch, path) -> Path:
    k = batch.values.shape[1]
    return _write_rows(path, [f"factor_{i}" for i in range(k)],
                       ([str(int(v)) for v in row] for row in batch.values))


def write_codes_csv(batch: CodeBatch, path) -> Path:
    d = batch.values.shape[1]
    return _write_rows(path, [f"code_{i}" for i in range(d)],
                       ([fmt_float(v) for v in row] for row in batch.values))


def _read_table(path, prefix: str) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    expected = [f"{prefix}_{i}" for i in range(len(header))]
    if header != expected:
        raise DataError(f"{path}: header must be {','.join(expected[:3])},... got {header}")
    body = rows[1:]
    for n, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {n} has {len(row)} fields, expected {len(header)}")
    return header, body


def read_codes_csv(path, mode: str = "mean") -> CodeBatch:
    header, body = _read_table(path, "code")
    out = np.empty((len(body), len(header)))
    for n, row in enumerate(body, start=2):
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {n}, column code_{j}: not a number: {cell!r}")
            if not math.isfinite(v):
                raise DataError(f"{path}: row {n}, column code_{j}: non-finite value {cell!r}")
            out[n - 2, j] = v
    if out.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    return CodeBatch(out, mode)


def _read_factor_values(path) -> np.ndarray:
    header, body = _read_table(path, "factor")
    out = np.empty((len(body), len(header)), dtype=np.int64)
    for n, row in enumerate(body, start=2):
        for j, cell in enumerate(row):
            try:
                v = int(cell.strip())
            except ValueError:
                raise DataError(f"{path}: row {n}, column factor_{j}: not an integer: {cell!r}")
            if v < 0:
                raise DataError(f"{path}: row {n}, column factor_{j}: negative value {v}")
            out[n - 2, j] = v
    if out.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    return out


def read_factors_csv(path, space: FactorSpace | None = None,
                     warnings_out: list | None = None) -> FactorBatch:
    """Read factors; without ``space`` the cardinality of column k is max + 1."""
    values = _read_factor_values(path)
    if space is None:
        cards = values.max(axis=0) + 1
        for k, c in enumerate(cards):
            seen = np.unique(values[:, k])
            msg = None
            if seen.size < c:
                missing = sorted(set(range(int(c))) - set(seen.tolist()))
                msg = f"values {missing} never occur; cardinality inferred as {c}"
            elif c < 2:
                msg = "constant factor; cardinality raised to 2"
            if msg:
                rec = WarningRecord(str(path), f"factor_{k}", msg)
                warnings.warn(f"{path}: factor_{k}: {msg}", IngestWarning, stacklevel=2)
                if warnings_out is not None:
                    warnings_out.append(rec)
        space = FactorSpace.from_cardinalities([max(int(c), 2) for c in cards])
    elif values.shape[1] != space.n_factors:
        raise DataError(f"{path}: {values.shape[1]} factor columns, space has {space.n_factors}")
    else:
        bad = np.argwhere(values >= space.cardinalities)
        if bad.size:
            r, k = bad[0]
            raise DataError(f"{path}: row {r + 2}, column factor_{k}: value {values[r, k]} "
                            f"exceeds cardinality {space.cardinalities[k]}")
    return FactorBatch(values, space)


def ingest_external(factors_csv, codes_csv, warnings_out: list | None = None
                    ) -> tuple[FactorBatch, CodeBatch]:
    """Validated (factors, codes) pair from two CSV files with matching rows."""
    factors = read_factors_csv(factors_csv, warnings_out=warnings_out)
    codes = read_codes_csv(codes_csv)
    if len(factors) != len(codes):
        raise DataError(f"row mismatch: {factors_csv} has {len(factors)} rows, "
                        f"{codes_csv} has {len(codes)}")
    return factors, codes


# factor-code matrices ---------------------------------------------------------

def write_matrix(m: FactorCodeMatrix, path) -> tuple[Path, Path]:
    """Matrix CSV (rows = factors) plus a JSON sidecar with its metadata."""
    path = Path(path)
    rows = ([name] + [fmt_float(v) for v in row] for name, row in zip(m.factor_names, m.values))
    csv_path = _write_rows(path, ["factor"] + list(m.code_names), rows)
    side = path.with_suffix(".json")
    side.write_text(json.dumps(m.metadata(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path, side


def read_matrix(path) -> FactorCodeMatrix:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))
    df = pd.read_csv(path, index_col=0, dtype={"factor": str}, float_precision="round_trip")
    acc = meta.get("row_accuracy")
    return FactorCodeMatrix(df.to_numpy(float), meta["estimator"], tuple(df.index),
                            tuple(df.columns), None if acc is None else np.array(acc))


# score tables -----------------------------------------------------------------

def write_score_table(df: pd.DataFrame, path) -> Path:
    """Rows sorted lexicographically on every column but ``value``."""
    cols = list(df.columns)
    keys = [c for c in cols if c != "value"]
    df = df.sort_values(keys, kind="mergesort")
    rows = ([fmt_float(v) if c == "value" else str(v) for c, v in zip(cols, rec)]
            for rec in df.itertuples(index=False, name=None))
    return _write_rows(path, cols, rows)


def read_score_table(path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype={"encoder_id": str, "dataset_id": str, "method_label": str,
                                      "hyperparam_label": str, "metric_name": str},
                         keep_default_na=False, float_precision="round_trip")
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot read score table {path}: {exc}") from exc
    return score_table(df)
