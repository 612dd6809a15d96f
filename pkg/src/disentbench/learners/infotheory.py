"""Equal-width discretization and plug-in entropy / mutual information (nats)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, DataError


@dataclass(frozen=True)
class DiscretizedBatch:
    values: np.ndarray  # N x d bin indices
    bins: int
    edges: tuple[np.ndarray, ...]


def discretize(codes, bins: int = 20) -> DiscretizedBatch:
    """Per-dimension equal-width histogram over the observed ``[min, max]``.

    A constant column lands entirely in bin 0.
    """
    x = np.asarray(getattr(codes, "values", codes), dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if bins < 2:
        raise ArgumentError(f"bins must be >= 2, got {bins}")
    if x.shape[0] < 2:
        raise ArgumentError(f"need at least 2 rows to discretize, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DataError("cannot discretize non-finite values")
    out = np.empty(x.shape, dtype=np.int64)
    edges = []
    for j in range(x.shape[1]):
        lo, hi = x[:, j].min(), x[:, j].max()
        if hi > lo:
            e = np.linspace(lo, hi, bins + 1)
        else:
            e = np.linspace(lo, lo + 1.0, bins + 1)
        out[:, j] = np.clip(np.digitize(x[:, j], e[1:-1]), 0, bins - 1)
        edges.append(e)
    return DiscretizedBatch(out, bins, tuple(edges))


def _codes(a) -> tuple[np.ndarray, int]:
    a = np.asarray(a)
    _, inv = np.unique(a, return_inverse=True)
    inv = inv.ravel()
    return inv, int(inv.max()) + 1 if inv.size else 0


def entropy(a) -> float:
    """Plug-in entropy of a discrete column."""
    inv, k = _codes(a)
    if inv.size == 0:
        raise ArgumentError("entropy of an empty column")
    c = np.bincount(inv, minlength=k).astype(np.float64)
    c = c[c > 0]
    n = inv.size
    return float(max(0.0, -np.sum(c / n * np.log(c / n))))


def mutual_information(a, b) -> float:
    """Plug-in mutual information of two discrete columns from their joint counts."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if a.shape != b.shape:
        raise ArgumentError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ArgumentError("mutual information of empty columns")
    ia, ka = _codes(a)
    ib, kb = _codes(b)
    joint = np.bincount(ia * kb + ib, minlength=ka * kb).reshape(ka, kb)
    ca = joint.sum(axis=1)
    cb = joint.sum(axis=0)
    n = a.size
    r, c = np.nonzero(joint)
    cab = joint[r, c]
    # integer products keep exactly-independent tables at exactly zero
    ratio = (cab.astype(np.float64) * n) / (ca[r].astype(np.float64) * cb[c])
    mi = float(np.sum(cab / n * np.log(ratio)))
    return max(0.0, mi)
