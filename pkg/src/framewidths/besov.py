"""Discrete Besov sequence spaces, weighted l2 norms and n-term approximation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import stats

from .errors import FitError, ParameterError, SizeError, WeightDomainError
from .wavelets import CoefficientArray

__all__ = [
    "BesovParams",
    "IndexFamily",
    "Weight",
    "RateReport",
    "besov_seq_norm",
    "weighted_l2_norm",
    "greedy_n_term",
    "greedy_errors",
    "tail_errors",
    "exhaustive_n_term_oracle",
    "extremal_ball_element",
    "random_ball_element",
    "fit_rate",
    "dyadic_n_list",
]


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


@dataclass(frozen=True)
class BesovParams:
    """Parameters of ``b^s_{p,q}`` in dimension ``d``."""

    s: float
    p: float
    q: float
    d: int = 1

    def __post_init__(self):
        for name in ("p", "q"):
            v = float(getattr(self, name))
            if not v > 0:
                raise ParameterError(f"{name} must be positive, got {v}")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "s", float(self.s))
        if int(self.d) < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.d}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def exponent(self) -> float:
        """``s + d(1/2 - 1/p)``; level j is weighted by ``2^{j * exponent}``."""
        return self.s + self.d * (0.5 - _inv(self.p))

    def t_condition(self, target_s: float, gain: float = 0.0) -> float:
        """Smoothness gap ``t = s + gain - target_s``; raises unless ``t > d(1/p - 1/2)_+``.

        ``gain`` is the number of derivatives a solution operator adds (2 for
        the Laplacian inverse, -1 for the inverse single layer operator).
        """
        t = self.s + gain - target_s
        bound = self.d * max(_inv(self.p) - 0.5, 0.0)
        if not t > bound:
            raise ParameterError(
                f"t = {t:g} violates the condition t > d(1/p - 1/2)_+ = {bound:g} "
                f"(p={self.p:g}, d={self.d})")
        return t

    def to_dict(self) -> dict:
        return {"s": self.s, "p": self.p, "q": self.q, "d": self.d}


@dataclass(frozen=True, eq=False)
class IndexFamily:
    """Per-level index sets ``nabla_j`` (``j = -1 .. J_max``) of ``(i, k...)`` tuples."""

    levels: dict
    dimension: int = 1
    onset: int = 0

    def __post_init__(self):
        frozen = {int(j): tuple(sorted(set(map(tuple, lams)))) for j, lams in self.levels.items()}
        object.__setattr__(self, "levels", dict(sorted(frozen.items())))
        object.__setattr__(self, "_lookup", {j: set(v) for j, v in self.levels.items()})

    @classmethod
    def full(cls, j_max: int, dimension: int = 1) -> "IndexFamily":
        """Dyadic unit-cube family: ``k in [0, 2^max(j,0))^d`` with all wavelet types."""
        from itertools import product

        levels = {}
        for j in range(-1, j_max + 1):
            side = range(2 ** max(j, 0))
            types = (0,) if j == -1 else range(1, 2**dimension)
            levels[j] = [(i, *k) for i in types for k in product(side, repeat=dimension)]
        return cls(levels, dimension)

    @property
    def j_max(self) -> int:
        return max(self.levels)

    def __contains__(self, key) -> bool:
        j, lam = key
        return tuple(lam) in self._lookup.get(j, ())

    def __iter__(self):
        for j, lams in self.levels.items():
            for lam in lams:
                yield (j, lam)

    def __len__(self):
        return sum(len(v) for v in self.levels.values())

    def cardinalities(self) -> dict:
        return {j: len(v) for j, v in self.levels.items()}

    def cardinality_constants(self, onset: int | None = None) -> tuple:
        """``(C1, C2)`` bounding ``2^{-jd} |nabla_j|`` for ``onset <= j <= j_max``."""
        onset = self.onset if onset is None else onset
        ratios = [len(v) / 2.0 ** (j * self.dimension) for j, v in self.levels.items() if j >= onset]
        if not ratios:
            raise ParameterError(f"no levels at or above onset {onset}")
        return (min(ratios), max(ratios))


class Weight:
    """Positive weight ``w_{j,lam}``, given explicitly or as a rule in the level."""

    def __init__(self, table: dict | None = None, level_rule=None, name: str = "custom"):
        if (table is None) == (level_rule is None):
            raise ParameterError("give exactly one of table or level_rule")
        if table is not None:
            table = {k: float(v) for k, v in table.items()}
            if any(not v > 0 for v in table.values()):
                raise ParameterError("weights must be positive")
        self._table = table
        self._rule = level_rule
        self.name = name

    @classmethod
    def uniform(cls) -> "Weight":
        return cls(level_rule=lambda j: np.ones_like(j, dtype=float), name="uniform")

    @classmethod
    def sobolev(cls, s: float) -> "Weight":
        """``w_{j,lam} = 2^{2js}``, the weight for which l2_w equals ``b^s_{2,2}``."""
        return cls(level_rule=lambda j: np.exp2(2.0 * s * np.asarray(j, dtype=float)),
                   name=f"sobolev(s={s:g})")

    def values_for(self, keys, levels=None) -> np.ndarray:
        if self._rule is not None:
            if levels is None:
                levels = np.array([k[0] for k in keys], dtype=int)
            w = np.asarray(self._rule(levels), dtype=float)
            if np.any(~(w > 0)):
                raise ParameterError("level rule produced a nonpositive weight")
            return w
        try:
            return np.array([self._table[k] for k in keys], dtype=float)
        except KeyError as exc:
            raise WeightDomainError(f"no weight for index {exc.args[0]}") from None

    def __call__(self, key) -> float:
        return float(self.values_for([key])[0])

    def __repr__(self):
        return f"Weight({self.name})"


def _weighted_squares(a: CoefficientArray, w: Weight) -> np.ndarray:
    return w.values_for(a.keys(), a.levels) * a.values**2


def besov_seq_norm(a: CoefficientArray, params: BesovParams) -> float:
    """Quasi-norm of ``a`` in ``b^s_{p,q}`` (sup-modified for infinite p or q)."""
    if len(a) == 0:
        return 0.0
    levels, vals = a.levels, np.abs(a.values)
    uniq, starts = np.unique(levels, return_index=True)
    p, q = params.p, params.q
    if math.isinf(p):
        block = np.maximum.reduceat(vals, starts)
    else:
        # scale per level before powering to avoid under/overflow for small p
        peak = np.maximum.reduceat(vals, starts)
        rel = vals / np.repeat(peak, np.diff(np.append(starts, len(vals))))
        block = peak * np.add.reduceat(rel**p, starts) ** (1.0 / p)
    terms = np.exp2(uniq * params.exponent) * block
    if math.isinf(q):
        return float(terms.max())
    top = terms.max()
    return float(top * np.sum((terms / top) ** q) ** (1.0 / q))


def weighted_l2_norm(a: CoefficientArray, w: Weight) -> float:
    if len(a) == 0:
        return 0.0
    return float(math.sqrt(math.fsum(_weighted_squares(a, w))))


def _greedy_order(a: CoefficientArray, w: Weight):
    sq = _weighted_squares(a, w)
    # keys are sorted, so a stable sort resolves ties by (j, lam)
    order = np.argsort(-np.sqrt(sq), kind="stable")
    return order, sq


def greedy_n_term(a: CoefficientArray, n: int, w: Weight) -> tuple:
    """Keep the ``n`` largest ``sqrt(w)|a|``; return ``(Lambda, tail error)``."""
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if len(a) == 0:
        return [], 0.0
    order, sq = _greedy_order(a, w)
    keys = a.keys()
    kept = order[:n]
    mask = np.ones(len(sq), dtype=bool)
    mask[kept] = False
    return [keys[i] for i in kept], float(math.sqrt(math.fsum(sq[mask])))


def greedy_errors(a: CoefficientArray, ns, w: Weight) -> np.ndarray:
    """Greedy tail errors for every ``n`` in ``ns`` from a single sort."""
    if len(a) == 0:
        return np.zeros(len(np.atleast_1d(ns)))
    return tail_errors(_weighted_squares(a, w), ns)


def tail_errors(sq, ns) -> np.ndarray:
    """``sqrt`` of the mass left after removing the ``n`` largest entries of ``sq``."""
    ns = np.asarray(ns, dtype=int)
    sq = np.sort(np.asarray(sq, dtype=float))
    if sq.size == 0:
        return np.zeros(ns.shape)
    tails = np.concatenate([np.cumsum(sq)[::-1], [0.0]])
    return np.sqrt(tails[np.minimum(ns, sq.size)])


def exhaustive_n_term_oracle(a: CoefficientArray, n: int, w: Weight, max_support: int = 20) -> tuple:
    """Brute-force minimum over every subset of size <= n."""
    N = len(a)
    if N > max_support:
        raise SizeError(f"support {N} exceeds the exhaustive limit {max_support}")
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if N == 0:
        return [], 0.0
    sq = _weighted_squares(a, w)
    keys = a.keys()
    bits = 1 << np.arange(N)
    best_err, best_mask = math.inf, 0
    chunk = 1 << 16
    for lo in range(0, 1 << N, chunk):
        masks = np.arange(lo, min(lo + chunk, 1 << N))
        member = (masks[:, None] & bits[None, :]) != 0
        ok = member.sum(axis=1) <= n
        tail = (~member[ok]).astype(float) @ sq
        if tail.size:
            idx = int(np.argmin(tail))
            if tail[idx] < best_err:
                best_err, best_mask = float(tail[idx]), int(masks[ok][idx])
    chosen = [keys[i] for i in range(N) if best_mask >> i & 1]
    rest = [sq[i] for i in range(N) if not best_mask >> i & 1]
    return chosen, float(math.sqrt(math.fsum(rest)))


def _full_level_keys(j: int, d: int):
    side = range(2 ** max(j, 0))
    types = (0,) if j == -1 else range(1, 2**d)
    return [(j, (i, *k)) for i in types for k in product(side, repeat=d)]


def extremal_ball_element(source: BesovParams, nlevels: int, profile: str = "equal-block") -> CoefficientArray:
    """Unit-norm element of ``b^s_{p,q}`` with an extremal level profile.

    ``equal-block`` fills levels ``0..nlevels`` completely with a constant per
    level chosen so that every level contributes equally to the norm.
    ``lacunary`` places one coefficient per level on ``-1..nlevels``.
    ``single-level`` fills level ``nlevels`` alone with a constant.
    """
    d = source.d
    entries = {}
    if profile == "single-level":
        entries = dict.fromkeys(_full_level_keys(nlevels, d), 1.0)
    elif profile == "equal-block":
        for j in range(0, nlevels + 1):
            keys = _full_level_keys(j, d)
            v = 2.0 ** (-j * source.exponent) * len(keys) ** -_inv(source.p)
            entries.update(dict.fromkeys(keys, float(v)))
    elif profile == "lacunary":
        scale = (nlevels + 2) ** -_inv(source.q)
        for j in range(-1, nlevels + 1):
            entries[(j, (0 if j == -1 else 1,) + (0,) * d)] = 2.0 ** (-j * source.exponent) * scale
    else:
        raise ParameterError(f"unknown profile {profile!r}; use equal-block, lacunary or single-level")
    a = CoefficientArray._trusted(entries, d)
    return a * (1.0 / besov_seq_norm(a, source))


def random_ball_element(source: BesovParams, nlevels: int, rng: np.random.Generator) -> CoefficientArray:
    """Random unit-norm element: Gaussian entries with an equal-block level envelope."""
    d = source.d
    keys, vals = [], []
    for j in range(-1, nlevels + 1):
        lk = _full_level_keys(j, d)
        envelope = 2.0 ** (-j * source.exponent) * len(lk) ** -_inv(source.p)
        keys.extend(lk)
        vals.append(envelope * rng.standard_normal(len(lk)) * math.exp(rng.standard_normal()))
    a = CoefficientArray._trusted(dict(zip(keys, np.concatenate(vals).tolist())), d)
    return a * (1.0 / besov_seq_norm(a, source))


def dyadic_n_list(n_min: int = 16, n_max: int = 1024) -> list:
    out, n = [], n_min
    while n <= n_max:
        out.append(n)
        n *= 2
    return out


@dataclass
class RateReport:
    """(n, error) samples with a least-squares log-log fit over ``fit_range``."""

    samples: list
    slope: float
    intercept: float
    residual: float
    fit_range: tuple
    stderr: float = 0.0
    target_slope: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def is_monotone(self) -> bool:
        errs = [e for _, e in sorted(self.samples)]
        return all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))

    def band(self, z: float = 1.96) -> tuple:
        return (self.slope - z * self.stderr, self.slope + z * self.stderr)

    def header(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "stderr": self.stderr,
            "confidence_band": list(self.band()),
            "fit_range": list(self.fit_range),
            "target_slope": self.target_slope,
            "monotone": self.is_monotone,
            **self.meta,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["n", "error"])
        for n, e in self.samples:
            writer.writerow([int(n), repr(float(e))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({**self.header(), "samples": [[int(n), float(e)] for n, e in self.samples]},
                          indent=2)

    def plot_data(self) -> str:
        return "".join(f"{math.log10(n):.12g} {math.log10(e):.12g}\n" for n, e in self.samples if e > 0)


def fit_rate(samples, fit_range=(16, 1024), target_slope=None, meta=None) -> RateReport:
    """Least-squares slope of log(error) against log(n) on ``fit_range``."""
    samples = [(int(n), float(e)) for n, e in samples]
    lo, hi = fit_range
    used = [(n, e) for n, e in samples if lo <= n <= hi]
    if len(used) < 4:
        raise FitError(f"need at least 4 samples in fit range {fit_range}, got {len(used)}")
    if any(not e > 0 for _, e in used):
        raise FitError("errors in the fit range must be positive")
    x = np.log([n for n, _ in used])
    y = np.log([e for _, e in used])
    res = stats.linregress(x, y)
    resid = y - (res.intercept + res.slope * x)
    slope = float(res.slope)
    if not math.isfinite(slope):
        raise FitError("non-finite slope")
    return RateReport(samples, slope, float(res.intercept), float(np.sqrt(np.mean(resid**2))),
                      (lo, hi), float(res.stderr), target_slope, dict(meta or {}))
