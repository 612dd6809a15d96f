"""Ground-truth factor spaces, sampling, and synthetic oracle encoders.

Oracle encoders stand in for a trained model: they map factor assignments to
codes with a known structure so that every metric can be checked against an
analytic expectation.  Discrete factors are dequantized to the centre of
their bin, ``(value + 0.5) / cardinality``, so 20-bin equal-width
discretization recovers any factor with at most 20 values exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError
from .impossibility import CLAMP, Entangler, norm_ppf

ENCODER_KINDS = ("identity", "permute_scale", "merge", "duplicate",
                 "noise_channels", "collapsed", "rotation", "concat")


@dataclass(frozen=True)
class FactorSpace:
    """Named discrete factors, each uniform over ``range(cardinality)``."""

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        facs = tuple((str(n), int(c)) for n, c in self.factors)
        object.__setattr__(self, "factors", facs)
        if len(facs) < 2:
            raise ArgumentError("a factor space needs at least 2 factors")
        names = [n for n, _ in facs]
        if len(set(names)) != len(names):
            raise ArgumentError(f"factor names must be unique: {names}")
        for n, c in facs:
            if c < 2:
                raise ArgumentError(f"factor {n!r} has cardinality {c} < 2")

    @classmethod
    def from_cardinalities(cls, cards: Sequence[int], names: Sequence[str] | None = None):
        if names is None:
            names = [f"factor_{k}" for k in range(len(cards))]
        return cls(tuple(zip(names, cards)))

    @property
    def n_factors(self) -> int:
        return len(self.factors)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.factors]

    @property
    def cardinalities(self) -> np.ndarray:
        return np.array([c for _, c in self.factors], dtype=np.int64)

    def entropies(self) -> np.ndarray:
        """Entropy of each (uniform) factor in nats."""
        return np.log(self.cardinalities.astype(float))

    def enumerate(self) -> np.ndarray:
        """Every factor assignment exactly once, in lexicographic order."""
        grids = np.meshgrid(*[np.arange(c) for c in self.cardinalities], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


@dataclass(frozen=True)
class FactorBatch:
    values: np.ndarray
    space: FactorSpace

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[1] != self.space.n_factors:
            raise ArgumentError(f"factor batch must be N x {self.space.n_factors}, got {v.shape}")
        if np.any(v < 0) or np.any(v >= self.space.cardinalities):
            raise ArgumentError("factor value out of range")
        v = v.astype(np.int64, copy=False)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, idx) -> "FactorBatch":
        return FactorBatch(self.values[idx], self.space)


@dataclass(frozen=True)
class CodeBatch:
    values: np.ndarray
    mode: str = "mean"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ArgumentError(f"code batch must be N x d with d >= 1, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ArgumentError("code batch contains non-finite values")
        if self.mode not in ("mean", "sampled"):
            raise ArgumentError(f"mode must be 'mean' or 'sampled', got {self.mode!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def sample_factors(space: FactorSpace, n: int, rng: np.random.Generator) -> FactorBatch:
    """``n`` i.i.d. uniform factor assignments."""
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    return FactorBatch(rng.integers(0, space.cardinalities, size=(n, space.n_factors)), space)


def sample_factors_fixed(space: FactorSpace, n: int, fixed_index: int, fixed_value: int,
                         rng: np.random.Generator) -> FactorBatch:
    """Like :func:`sample_factors` but with one factor clamped to ``fixed_value``."""
    if not 0 <= fixed_index < space.n_factors:
        raise ArgumentError(f"factor index {fixed_index} out of range")
    if not 0 <= fixed_value < space.cardinalities[fixed_index]:
        raise ArgumentError(
            f"value {fixed_value} invalid for factor {fixed_index} "
            f"(cardinality {space.cardinalities[fixed_index]})")
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    values = rng.integers(0, space.cardinalities, size=(n, space.n_factors))
    values[:, fixed_index] = fixed_value
    return FactorBatch(values, space)


def dequantize(values: np.ndarray, cards: np.ndarray) -> np.ndarray:
    return (values + 0.5) / cards


@dataclass(frozen=True)
class OracleEncoder:
    """Synthetic encoder with a known factor-to-code structure.

    Kinds and the parameters they read:

    ``identity``        ``factors`` (default all): code k = dequantized z_k
    ``permute_scale``   ``permutation``, ``scales``: code i = scales[i] * z_{permutation[i]}
    ``merge``           ``groups`` of two factors each encoded injectively in one
                        dimension; ``passthrough`` appends the ungrouped factors
    ``duplicate``       ``copies``: identity code followed by copies of those dims
    ``noise_channels``  ``noise_std`` per extra pure-noise dim; ``passthrough``
                        prepends the identity code
    ``collapsed``       ``n_dims`` constant dimensions equal to ``value``
    ``rotation``        ``entangler`` applied to jittered dequantized ``factors``;
                        ``mix`` in (0, 1] blends towards the identity code
    ``concat``          ``parts``: outputs of sub-encoders side by side

    ``sigma`` is the per-dimension standard deviation of the Gaussian encoder;
    it only affects ``mode="sampled"``.
    """

    kind: str
    factors: tuple[int, ...] | None = None
    permutation: tuple[int, ...] | None = None
    scales: tuple[float, ...] | None = None
    groups: tuple[tuple[int, ...], ...] = ()
    passthrough: bool = True
    copies: tuple[int, ...] = ()
    noise_std: tuple[float, ...] = ()
    n_dims: int = 1
    value: float = 0.5
    entangler: Entangler | None = None
    mix: float = 1.0
    parts: tuple["OracleEncoder", ...] = ()
    sigma: float | tuple[float, ...] = 0.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ArgumentError(f"unknown encoder kind {self.kind!r}")
        sig = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if np.any(sig < 0) or not np.all(np.isfinite(sig)):
            raise ArgumentError("sigma must be finite and >= 0")
        if any(s < 0 for s in self.noise_std):
            raise ArgumentError("noise_std entries must be >= 0")
        if not 0.0 <= self.mix <= 1.0:
            raise ArgumentError(f"mix must lie in [0, 1], got {self.mix}")
        for g in self.groups:
            if len(g) != 2:
                raise ArgumentError(f"merge groups must have exactly two factors, got {g}")
        flat = [k for g in self.groups for k in g]
        if len(set(flat)) != len(flat):
            raise ArgumentError("merge groups must be disjoint")
        if self.kind == "rotation" and self.entangler is None:
            raise ArgumentError("rotation encoder needs an entangler")
        if self.kind == "permute_scale" and (self.permutation is None or self.scales is None
                                             or len(self.permutation) != len(self.scales)):
            raise ArgumentError("permute_scale needs permutation and scales of equal length")

    # constructors ---------------------------------------------------------

    @classmethod
    def identity(cls, sigma=0.0, **kw):
        return cls("identity", sigma=sigma, **kw)

    @classmethod
    def rotation(cls, space: FactorSpace, alpha: float = 0.25, marginal: str = "uniform01",
                 factors: Sequence[int] | None = None, mix: float = 1.0, **kw):
        k = space.n_factors if factors is None else len(factors)
        return cls("rotation", entangler=Entangler.create(k, alpha, marginal),
                   factors=None if factors is None else tuple(factors), mix=mix, **kw)

    @classmethod
    def concat(cls, *parts: "OracleEncoder", **kw):
        return cls("concat", parts=tuple(parts), **kw)

    # structure ------------------------------------------------------------

    def output_dim(self, space: FactorSpace) -> int:
        k = space.n_factors
        kind = self.kind
        if kind == "identity":
            return k if self.factors is None else len(self.factors)
        if kind == "permute_scale":
            return len(self.permutation)
        if kind == "merge":
            grouped = {f for g in self.groups for f in g}
            return len(self.groups) + (k - len(grouped) if self.passthrough else 0)
        if kind == "duplicate":
            return k + len(self.copies)
        if kind == "noise_channels":
            return (k if self.passthrough else 0) + len(self.noise_std)
        if kind == "collapsed":
            return self.n_dims
        if kind == "rotation":
            return self.entangler.d
        return sum(p.output_dim(space) for p in self.parts)

    def check(self, space: FactorSpace) -> None:
        """Raise :class:`ArgumentError` if the encoder cannot read ``space``."""
        k = space.n_factors
        idx = []
        if self.factors is not None:
            idx += list(self.factors)
        if self.permutation is not None:
            idx += list(self.permutation)
        idx += [f for g in self.groups for f in g] + list(self.copies)
        bad = [i for i in idx if not 0 <= i < k]
        if bad:
            raise ArgumentError(f"encoder references factors {bad} outside a {k}-factor space")
        if self.kind == "rotation":
            n = k if self.factors is None else len(self.factors)
            if n != self.entangler.d:
                raise ArgumentError(
                    f"entangler dimension {self.entangler.d} does not match {n} factors")
        for p in self.parts:
            p.check(space)
        sig = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if sig.size not in (1, self.output_dim(space)):
            raise ArgumentError("sigma must be a scalar or one value per output dimension")

    # evaluation -----------------------------------------------------------

    def mean_codes(self, values: np.ndarray, space: FactorSpace,
                   rng: np.random.Generator) -> np.ndarray:
        cards = space.cardinalities
        n, k = values.shape
        kind = self.kind
        if kind == "identity":
            cols = range(k) if self.factors is None else self.factors
            return dequantize(values[:, cols], cards[list(cols)])
        if kind == "permute_scale":
            p = list(self.permutation)
            return dequantize(values[:, p], cards[p]) * np.asarray(self.scales)
        if kind == "merge":
            out = []
            for a, b in self.groups:
                merged = values[:, a] * cards[b] + values[:, b]
                out.append((merged + 0.5) / (cards[a] * cards[b]))
            if self.passthrough:
                grouped = {f for g in self.groups for f in g}
                out += [dequantize(values[:, j], cards[j]) for j in range(k) if j not in grouped]
            return np.stack(out, axis=1) if out else np.empty((n, 0))
        if kind == "duplicate":
            base = dequantize(values, cards)
            return np.concatenate([base, base[:, list(self.copies)]], axis=1)
        if kind == "noise_channels":
            noise = rng.standard_normal((n, len(self.noise_std))) * np.asarray(self.noise_std)
            if self.passthrough:
                return np.concatenate([dequantize(values, cards), noise], axis=1)
            return noise
        if kind == "collapsed":
            return np.full((n, self.n_dims), float(self.value))
        if kind == "rotation":
            cols = list(range(k)) if self.factors is None else list(self.factors)
            jitter = np.clip(rng.random((n, len(cols))), CLAMP, 1.0 - CLAMP)
            u = (values[:, cols] + jitter) / cards[cols]
            e = self.entangler
            if all(m == "standard_normal" for m in e.marginal):
                # latent is the Gaussian image of the jittered factor
                u = norm_ppf(u)
            rotated = e(u)
            if self.mix >= 1.0:
                return rotated
            centre = dequantize(values[:, cols], cards[cols])
            return (1.0 - self.mix) * centre + self.mix * rotated
        return np.concatenate([p.mean_codes(values, space, rng) for p in self.parts], axis=1)


def encode(encoder: OracleEncoder, factors: FactorBatch, mode: str = "mean",
           rng: np.random.Generator | None = None) -> CodeBatch:
    """Codes for ``factors``; ``mode="sampled"`` adds the encoder's Gaussian noise."""
    if mode not in ("mean", "sampled"):
        raise ArgumentError(f"mode must be 'mean' or 'sampled', got {mode!r}")
    encoder.check(factors.space)
    if rng is None:
        rng = np.random.default_rng(0)
    mean = encoder.mean_codes(factors.values, factors.space, rng)
    if mode == "sampled":
        mean = mean + sample_noise(encoder, factors.space, len(factors), rng)
    return CodeBatch(mean, mode)


def sample_noise(encoder: OracleEncoder, space: FactorSpace, n: int,
                 rng: np.random.Generator) -> np.ndarray:
    d = encoder.output_dim(space)
    sig = np.broadcast_to(np.asarray(encoder.sigma, dtype=float), (d,))
    if not np.any(sig > 0):
        return np.zeros((n, d))
    return rng.standard_normal((n, d)) * sig


def encode_both(encoder: OracleEncoder, factors: FactorBatch,
                rng: np.random.Generator) -> tuple[CodeBatch, CodeBatch]:
    """Mean and sampled codes sharing one draw of any nuisance randomness."""
    mean = encode(encoder, factors, "mean", rng)
    noise = sample_noise(encoder, factors.space, len(factors), rng)
    return mean, CodeBatch(mean.values + noise, "sampled")
