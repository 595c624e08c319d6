"""Compactly supported biorthogonal spline wavelets on R and R^2.

Filters follow the convention ``phi(x) = sum_k h_k sqrt(2) phi(2x - k)`` with
``sum_k h_k = sqrt(2)``.  Highpass filters are derived from the lowpass pair,

    g_k = (-1)^k * dual_h_{1-k},      dual_g_k = (-1)^k * h_{1-k},

and atoms are ``psi_{i,j,k}(x) = 2^{jd/2} psi_i(2^j x - k)``.  Level ``j = -1``
stands for the integer translates of the scaling function at level 0.

The fast transforms act on zero-extended data with full (untruncated)
convolutions, so analysis followed by synthesis is exact on the index ranges
produced.  Samples on a dyadic grid are turned into finest-level scaling
coefficients by the interpolation property of the primal scaling function,
which holds for all supported families (B-splines of order 1 and 2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import comb

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import ConfigurationError, NumericError, ResolutionError

SQRT2 = math.sqrt(2.0)

__all__ = [
    "Filter",
    "WaveletSystem",
    "DyadicGrid",
    "CoefficientArray",
    "SUPPORTED_FAMILIES",
    "build_system",
    "system_from_filters",
    "load_filters",
    "evaluate_generator",
    "evaluate_atom",
    "analyze",
    "periodic_analyze",
    "synthesize",
    "vanishing_moments_check",
    "exact_moments",
    "inner_product",
    "scaling_gram",
    "perfect_reconstruction_residual",
    "sobolev_exponent",
]


@dataclass(frozen=True, eq=False)
class Filter:
    """Finite filter ``taps[t] = h_{start + t}``."""

    taps: np.ndarray
    start: int

    def __post_init__(self):
        taps = np.array(self.taps, dtype=float)
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "start", int(self.start))

    @property
    def end(self) -> int:
        return self.start + len(self.taps) - 1

    def __len__(self):
        return len(self.taps)

    def __getitem__(self, k: int) -> float:
        if self.start <= k <= self.end:
            return float(self.taps[k - self.start])
        return 0.0

    def indices(self) -> range:
        return range(self.start, self.end + 1)

    def quadrature_mirror(self) -> "Filter":
        """Return ``(-1)^k f_{1-k}``."""
        start = 1 - self.end
        taps = [(-1) ** (k % 2) * self[1 - k] for k in range(start, 1 - self.start + 1)]
        return Filter(taps, start)


# (primal spline order, dual order) -> (primal lowpass, dual lowpass) with sum 1.
_SPLINE_FILTERS = {
    (1, 1): (([Fraction(1, 2), Fraction(1, 2)], 0), ([Fraction(1, 2), Fraction(1, 2)], 0)),
    (2, 2): (
        ([Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)], 0),
        ([Fraction(-1, 8), Fraction(1, 4), Fraction(3, 4), Fraction(1, 4), Fraction(-1, 8)], -1),
    ),
    (2, 4): (
        ([Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)], 0),
        (
            [
                Fraction(3, 128), Fraction(-3, 64), Fraction(-1, 8), Fraction(19, 64),
                Fraction(45, 64),
                Fraction(19, 64), Fraction(-1, 8), Fraction(-3, 64), Fraction(3, 128),
            ],
            -3,
        ),
    ),
}
SUPPORTED_FAMILIES = tuple(_SPLINE_FILTERS)


@dataclass(frozen=True, eq=False)
class WaveletSystem:
    family: tuple
    dimension: int
    primal_lowpass: Filter
    primal_highpass: Filter
    dual_lowpass: Filter
    dual_highpass: Filter
    support_radius: int
    smoothness: tuple  # (primal, dual) L2-Sobolev exponent estimates
    vanishing_moments: tuple  # (primal, dual): highest vanishing moment order
    shift: int  # integer node where the primal scaling function equals 1

    @property
    def r(self) -> float:
        """Regularity parameter: the smaller of the two smoothness estimates."""
        return float(min(self.smoothness))

    @property
    def n_types(self) -> int:
        return 2 ** self.dimension - 1

    def lowpass(self, side: str) -> Filter:
        return self.primal_lowpass if side == "primal" else self.dual_lowpass

    def highpass(self, side: str) -> Filter:
        return self.primal_highpass if side == "primal" else self.dual_highpass

    def generator_support(self, side: str, kind: str) -> tuple:
        h = self.lowpass(side)
        if kind == "scaling":
            return (h.start, h.end)
        g = self.highpass(side)
        return ((g.start + h.start) / 2, (g.end + h.end) / 2)

    def atom_support(self, j: int, lam: tuple, side: str = "primal") -> list:
        """Per-axis closed support interval of ``psi_{j,lam}``."""
        i, k = lam[0], lam[1:]
        level = max(j, 0)
        out = []
        for axis, ka in enumerate(k):
            kind = "wavelet" if (j >= 0 and (i >> axis) & 1) else "scaling"
            a, b = self.generator_support(side, kind)
            out.append(((a + ka) / 2**level, (b + ka) / 2**level))
        return out


def _fraction_filter(values, start) -> Filter:
    return Filter([float(v) * SQRT2 for v in values], start)


def sobolev_exponent(lowpass: Filter) -> float:
    """L2-Sobolev regularity of the refinable function via its transfer operator.

    Writes the symbol as ``((1+z)/2)^L q(z)`` and returns
    ``L - log2(rho(T_{|q|^2})) / 2``.
    """
    poly = np.asarray(lowpass.taps) / SQRT2
    order = 0
    while len(poly) > 1:
        quot, rem = npoly.polydiv(poly, np.array([0.5, 0.5]))
        if np.max(np.abs(rem)) > 1e-12:
            break
        poly, order = quot, order + 1
    u = np.convolve(poly, poly[::-1])
    m = (len(u) - 1) // 2
    size = 2 * m + 1
    T = np.zeros((size, size))
    for a in range(size):
        for b in range(size):
            idx = 2 * (a - m) - (b - m)
            if -m <= idx <= m:
                T[a, b] = 2.0 * u[idx + m]
    rho = float(np.max(np.abs(np.linalg.eigvals(T))))
    return order - math.log2(rho) / 2.0


def _zero_order_at_pi(f: Filter) -> int:
    """Number of vanishing moments of the wavelet built from the *other* side."""
    poly = np.asarray(f.taps) / SQRT2
    order = 0
    while len(poly) > 1:
        quot, rem = npoly.polydiv(poly, np.array([0.5, 0.5]))
        if np.max(np.abs(rem)) > 1e-12:
            break
        poly, order = quot, order + 1
    return order


def perfect_reconstruction_residual(system: WaveletSystem) -> float:
    """Largest violation of the biorthogonal filter-bank identities."""
    h, hd = system.primal_lowpass, system.dual_lowpass
    g, gd = system.primal_highpass, system.dual_highpass
    res = [
        abs(sum(h.taps) - SQRT2),
        abs(sum(hd.taps) - SQRT2),
        abs(sum((-1) ** (k % 2) * h[k] for k in h.indices())),
        abs(sum((-1) ** (k % 2) * hd[k] for k in hd.indices())),
    ]
    lo = min(h.start, hd.start, g.start, gd.start) - 2
    hi = max(h.end, hd.end, g.end, gd.end) + 2
    span = range(lo, hi + 1)
    for m in range(-(hi - lo), hi - lo + 1):
        delta = 1.0 if m == 0 else 0.0
        res.append(abs(sum(h[k] * hd[k + 2 * m] for k in span) - delta))
        res.append(abs(sum(g[k] * gd[k + 2 * m] for k in span) - delta))
        res.append(abs(sum(h[k] * gd[k + 2 * m] for k in span)))
        res.append(abs(sum(g[k] * hd[k + 2 * m] for k in span)))
    # full reconstruction identity per output parity
    for n in (0, 1):
        for m in range(n - 6, n + 7):
            acc = sum(
                h[n - 2 * k] * hd[m - 2 * k] + g[n - 2 * k] * gd[m - 2 * k]
                for k in range(lo - 8, hi + 9)
            )
            res.append(abs(acc - (1.0 if m == n else 0.0)))
    return float(max(res))


def system_from_filters(primal_lowpass: Filter, dual_lowpass: Filter, dimension: int = 1,
                        family=None, primal_highpass=None, dual_highpass=None) -> WaveletSystem:
    if dimension not in (1, 2):
        raise ConfigurationError(f"unsupported dimension {dimension}; supported: 1, 2")
    g = primal_highpass if primal_highpass is not None else dual_lowpass.quadrature_mirror()
    gd = dual_highpass if dual_highpass is not None else primal_lowpass.quadrature_mirror()
    ends = [primal_lowpass.start, primal_lowpass.end, dual_lowpass.start, dual_lowpass.end,
            (g.start + primal_lowpass.start) / 2, (g.end + primal_lowpass.end) / 2,
            (gd.start + dual_lowpass.start) / 2, (gd.end + dual_lowpass.end) / 2]
    N = int(math.ceil(max(abs(e) for e in ends)))
    shift = _interpolation_node(primal_lowpass)
    system = WaveletSystem(
        family=family if family is not None else ("custom",),
        dimension=dimension,
        primal_lowpass=primal_lowpass,
        primal_highpass=g,
        dual_lowpass=dual_lowpass,
        dual_highpass=gd,
        support_radius=N,
        smoothness=(sobolev_exponent(primal_lowpass), sobolev_exponent(dual_lowpass)),
        vanishing_moments=(_zero_order_at_pi(dual_lowpass) - 1, _zero_order_at_pi(primal_lowpass) - 1),
        shift=shift,
    )
    res = perfect_reconstruction_residual(system)
    if res > 1e-12:
        raise NumericError(f"filters violate perfect reconstruction (residual {res:.3e})")
    return system


def _interpolation_node(h: Filter) -> int:
    """Integer node s with phi(n) = delta_{n,s}; errors if phi is not interpolating."""
    lo, hi = h.start, h.end
    nodes = list(range(lo, max(hi, lo + 1)))  # half-open support [lo, hi)
    M = np.array([[SQRT2 * h[2 * n - m] for m in nodes] for n in nodes])
    w, V = np.linalg.eig(M)
    idx = int(np.argmin(np.abs(w - 1.0)))
    if abs(w[idx] - 1.0) > 1e-10:
        raise NumericError("refinement matrix has no eigenvalue 1; degenerate lowpass filter")
    v = np.real(V[:, idx])
    v = v / v.sum()
    peak = int(np.argmax(np.abs(v)))
    expected = np.zeros_like(v)
    expected[peak] = 1.0
    if np.max(np.abs(v - expected)) > 1e-10:
        raise ConfigurationError("primal scaling function must be interpolating at the integers")
    return nodes[peak]


def build_system(family=(1, 1), dimension: int = 1) -> WaveletSystem:
    """Construct one of the supported CDF biorthogonal spline systems.

    ``family`` is ``(primal order, dual order)``; ``(1, 1)`` is Haar.
    """
    family = tuple(int(v) for v in family)
    if family not in _SPLINE_FILTERS:
        raise ConfigurationError(
            f"unsupported wavelet family {family}; supported: {list(SUPPORTED_FAMILIES)}")
    if dimension not in (1, 2):
        raise ConfigurationError(f"unsupported dimension {dimension}; supported: 1, 2")
    (pv, ps), (dv, ds) = _SPLINE_FILTERS[family]
    return system_from_filters(_fraction_filter(pv, ps), _fraction_filter(dv, ds),
                               dimension=dimension, family=family)


def _parse_number(tok: str) -> float:
    tok = tok.strip()
    if "/" in tok:
        return float(Fraction(tok))
    return float(tok)


def load_filters(path, dimension: int = 1) -> WaveletSystem:
    """Read a filter file and build a system from it.

    One filter per line: ``<name> <start> <v_start> <v_start+1> ...`` with
    ``name`` in ``primal_lowpass``, ``dual_lowpass``, ``primal_highpass``,
    ``dual_highpass`` (the highpass lines are optional).  Values are decimals
    or rationals.  A line ``normalization unit-sum`` declares that lowpass
    taps sum to 1 and must be rescaled by sqrt(2).  ``#`` starts a comment.
    """
    filters = {}
    scale = 1.0
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] == "normalization":
                if parts[1:] == ["unit-sum"]:
                    scale = SQRT2
                elif parts[1:] == ["sqrt2-sum"]:
                    scale = 1.0
                else:
                    raise ConfigurationError(f"unknown normalization {parts[1:]}")
                continue
            name = parts[0]
            if name not in ("primal_lowpass", "dual_lowpass", "primal_highpass", "dual_highpass"):
                raise ConfigurationError(f"unknown filter name {name!r}")
            filters[name] = (int(parts[1]), [_parse_number(t) for t in parts[2:]])
    missing = {"primal_lowpass", "dual_lowpass"} - set(filters)
    if missing:
        raise ConfigurationError(f"filter file lacks {sorted(missing)}")

    def make(name):
        if name not in filters:
            return None
        start, vals = filters[name]
        return Filter(np.array(vals) * scale, start)

    return system_from_filters(make("primal_lowpass"), make("dual_lowpass"), dimension,
                               family=("file", str(path)),
                               primal_highpass=make("primal_highpass"),
                               dual_highpass=make("dual_highpass"))


# --------------------------------------------------------------------------
# grids and coefficient arrays
# --------------------------------------------------------------------------


def _as_box(box, dimension=None):
    box = tuple((Fraction(lo).limit_denominator(1 << 40), Fraction(hi).limit_denominator(1 << 40))
                for lo, hi in box)
    if dimension is not None and len(box) != dimension:
        raise ConfigurationError(f"box has {len(box)} axes, expected {dimension}")
    return box


@dataclass(frozen=True, eq=False)
class DyadicGrid:
    """Samples at spacing 2^-level on a closed axis-aligned box."""

    level: int
    box: tuple
    values: np.ndarray
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        box = _as_box(self.box)
        object.__setattr__(self, "box", box)
        values = np.array(self.values, dtype=float)
        scale = 1 << self.level if self.level >= 0 else None
        if scale is None:
            raise ConfigurationError("grid level must be nonnegative")
        shape = []
        for lo, hi in box:
            if (lo * scale).denominator != 1 or (hi * scale).denominator != 1:
                raise ConfigurationError(f"box edge not aligned with level {self.level}")
            if hi < lo:
                raise ConfigurationError("empty box")
            shape.append(int((hi - lo) * scale) + 1)
        if values.ndim == 0 and values.size == 1 and shape != [1] * len(box):
            values = np.full(shape, float(values))
        if values.shape != tuple(shape):
            raise ConfigurationError(f"values shape {values.shape} does not match grid {tuple(shape)}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @classmethod
    def zeros(cls, level: int, box) -> "DyadicGrid":
        box = _as_box(box)
        shape = tuple(int((hi - lo) * (1 << level)) + 1 for lo, hi in box)
        return cls(level, box, np.zeros(shape))

    @classmethod
    def from_function(cls, func, level: int, box) -> "DyadicGrid":
        grid = cls.zeros(level, box)
        return grid.with_values(func(*grid.mesh()))

    @property
    def dimension(self) -> int:
        return len(self.box)

    @property
    def spacing(self) -> float:
        return 2.0 ** -self.level

    @property
    def first_node(self) -> tuple:
        return tuple(int(lo * (1 << self.level)) for lo, _ in self.box)

    def coords(self) -> list:
        h = self.spacing
        return [(n0 + np.arange(s)) * h for n0, s in zip(self.first_node, self.values.shape)]

    def mesh(self) -> list:
        return np.meshgrid(*self.coords(), indexing="ij")

    def with_values(self, values, flags=None) -> "DyadicGrid":
        return DyadicGrid(self.level, self.box, np.broadcast_to(values, self.values.shape),
                          self.flags if flags is None else flags)

    def l2_norm(self, mask=None) -> float:
        v = self.values if mask is None else np.where(mask, self.values, 0.0)
        return float(np.sqrt(np.sum(v**2) * self.spacing ** self.dimension))


Key = tuple  # (j, (i, k_1, ..., k_d))


class CoefficientArray:
    """Sparse map ``(j, (i, k...)) -> value``; zero values are never stored.

    Level -1 entries use type ``i = 0`` and hold scaling-function
    coefficients; levels ``j >= 0`` hold wavelet coefficients of type
    ``i in 1..2^d-1``.
    """

    __slots__ = ("_entries", "dimension", "_cache")

    def __init__(self, entries=None, dimension: int = 1):
        self.dimension = int(dimension)
        clean = {}
        for key, val in (entries or {}).items():
            j, lam = key
            lam = tuple(int(x) for x in lam)
            if len(lam) != self.dimension + 1:
                raise ConfigurationError(f"index {lam} has wrong length for d={self.dimension}")
            j = int(j)
            if j < -1:
                raise ConfigurationError(f"level {j} < -1")
            if (j == -1) != (lam[0] == 0):
                raise ConfigurationError(f"type {lam[0]} inconsistent with level {j}")
            val = float(val)
            if val != 0.0:
                clean[(j, lam)] = val
        self._entries = clean
        self._cache = None

    # mapping protocol
    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self.keys())

    def __contains__(self, key):
        return key in self._entries

    def __getitem__(self, key):
        return self._entries.get(key, 0.0)

    def get(self, key, default=0.0):
        return self._entries.get(key, default)

    def keys(self) -> list:
        return self._arrays()[0]

    def items(self):
        return [(k, self._entries[k]) for k in self.keys()]

    def _arrays(self):
        if self._cache is None:
            keys = sorted(self._entries)
            levels = np.array([k[0] for k in keys], dtype=int)
            values = np.array([self._entries[k] for k in keys], dtype=float)
            self._cache = (keys, levels, values)
        return self._cache

    @property
    def levels(self) -> np.ndarray:
        return self._arrays()[1]

    @property
    def values(self) -> np.ndarray:
        return self._arrays()[2]

    @property
    def max_level(self) -> int:
        return int(self.levels.max()) if len(self) else -1

    def as_dict(self) -> dict:
        return dict(self._entries)

    @classmethod
    def _trusted(cls, entries: dict, dimension: int) -> "CoefficientArray":
        # internal constructor: keys already canonical, values float
        obj = cls.__new__(cls)
        obj.dimension = dimension
        obj._entries = {k: v for k, v in entries.items() if v != 0.0}
        obj._cache = None
        return obj

    @classmethod
    def from_arrays(cls, keys, values, dimension=1) -> "CoefficientArray":
        return cls(dict(zip(keys, values)), dimension)

    def restrict(self, keep) -> "CoefficientArray":
        """Entries whose key is in ``keep`` (a container) or satisfies ``keep(key)``."""
        test = keep if callable(keep) else keep.__contains__
        return self._trusted({k: v for k, v in self._entries.items() if test(k)}, self.dimension)

    def map_values(self, func) -> "CoefficientArray":
        keys, _, vals = self._arrays()
        return self._trusted(dict(zip(keys, np.asarray(func(vals), dtype=float).tolist())),
                             self.dimension)

    def __add__(self, other: "CoefficientArray") -> "CoefficientArray":
        out = dict(self._entries)
        for k, v in other._entries.items():
            out[k] = out.get(k, 0.0) + v
        return self._trusted(out, self.dimension)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        c = float(c)
        return self._trusted({k: c * v for k, v in self._entries.items()}, self.dimension)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __repr__(self):
        return f"CoefficientArray({len(self)} entries, d={self.dimension})"

    def max_abs_diff(self, other: "CoefficientArray") -> float:
        keys = set(self._entries) | set(other._entries)
        if not keys:
            return 0.0
        return max(abs(self[k] - other[k]) for k in keys)

    # serialization
    def to_text(self) -> str:
        lines = []
        for (j, lam), v in self.items():
            lines.append(" ".join([str(j)] + [str(x) for x in lam] + [repr(v)]))
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, dimension: int = 1) -> "CoefficientArray":
        entries = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != dimension + 3:
                raise ConfigurationError(f"bad coefficient line {line!r} for d={dimension}")
            j = int(parts[0])
            lam = tuple(int(x) for x in parts[1:-1])
            entries[(j, lam)] = entries.get((j, lam), 0.0) + float(parts[-1])
        return cls(entries, dimension)

    def to_json(self) -> str:
        return json.dumps({
            "dimension": self.dimension,
            "entries": [[j, *lam, v] for (j, lam), v in self.items()],
        })

    @classmethod
    def from_json(cls, text: str) -> "CoefficientArray":
        obj = json.loads(text)
        d = int(obj["dimension"])
        entries = {}
        for row in obj["entries"]:
            entries[(int(row[0]), tuple(int(x) for x in row[1:-1]))] = float(row[-1])
        return cls(entries, d)


# --------------------------------------------------------------------------
# filter-bank steps on zero-extended arrays with global index offsets
# --------------------------------------------------------------------------


def _down(arr: np.ndarray, start: int, filt: Filter, axis: int):
    """out[k] = sum_m filt[m] arr[2k + m] along ``axis``."""
    A = np.moveaxis(arr, axis, 0)
    n = A.shape[0]
    a, b = filt.start, filt.end
    kmin = -((b - start) // 2)  # ceil((start - b) / 2)
    kmax = (start + n - 1 - a) // 2
    nk = kmax - kmin + 1
    out = np.zeros((nk,) + A.shape[1:])
    for t, coef in enumerate(filt.taps):
        if coef == 0.0:
            continue
        p0 = 2 * kmin + (a + t) - start
        qlo = max(0, (1 - p0) // 2)
        qhi = min(nk - 1, (n - 1 - p0) // 2)
        if qlo <= qhi:
            out[qlo:qhi + 1] += coef * A[p0 + 2 * qlo: p0 + 2 * qhi + 1: 2]
    return np.moveaxis(out, 0, axis), kmin


def _up(arr: np.ndarray, start: int, filt: Filter, axis: int):
    """out[n] = sum_k filt[n - 2k] arr[k] along ``axis``."""
    A = np.moveaxis(arr, axis, 0)
    n = A.shape[0]
    out = np.zeros((2 * (n - 1) + len(filt),) + A.shape[1:])
    for t, coef in enumerate(filt.taps):
        if coef != 0.0:
            out[t: t + 2 * n - 1: 2] += coef * A
    return np.moveaxis(out, 0, axis), 2 * start + filt.start


def _accumulate(parts):
    """Sum dense blocks given as (array, start-tuple) on the union of their ranges."""
    parts = [p for p in parts if p is not None]
    if not parts:
        return None
    d = parts[0][0].ndim
    lo = [min(p[1][a] for p in parts) for a in range(d)]
    hi = [max(p[1][a] + p[0].shape[a] for p in parts) for a in range(d)]
    out = np.zeros([h - l for l, h in zip(lo, hi)])
    for arr, st in parts:
        sl = tuple(slice(st[a] - lo[a], st[a] - lo[a] + arr.shape[a]) for a in range(d))
        out[sl] += arr
    return out, tuple(lo)


def _bands(d: int):
    """Band tuples (bit per axis, 1 = highpass) with their wavelet type index."""
    for bits in product((0, 1), repeat=d):
        i = sum(b << a for a, b in enumerate(bits))
        yield i, bits


def _decompose(block, system: WaveletSystem):
    arr, start = block
    d = arr.ndim
    outs = {(): (arr, ())}
    for axis in range(d):
        nxt = {}
        for bits, (a, st) in outs.items():
            for bit, filt in ((0, system.dual_lowpass), (1, system.dual_highpass)):
                res, s = _down(a, start[axis], filt, axis)
                nxt[bits + (bit,)] = (res, st + (s,))
        outs = nxt
    return {i: outs[bits] for i, bits in _bands(d)}


def _reconstruct_level(scaling, details, system: WaveletSystem, d: int):
    parts = []
    for i, bits in _bands(d):
        block = scaling if i == 0 else details.get(i)
        if block is None:
            continue
        arr, start = block
        st = list(start)
        for axis in range(d):
            filt = system.primal_highpass if bits[axis] else system.primal_lowpass
            arr, st[axis] = _up(arr, st[axis], filt, axis)
        parts.append((arr, tuple(st)))
    return _accumulate(parts)


def _block_entries(block, j: int, i: int, out: dict):
    arr, start = block
    nz = np.nonzero(arr)
    vals = arr[nz]
    for idx, v in zip(zip(*nz), vals):
        out[(j, (i,) + tuple(int(s + x) for s, x in zip(start, idx)))] = float(v)


def _group_blocks(c: CoefficientArray):
    """Dense blocks per (level, type) from a sparse coefficient array."""
    groups = {}
    for (j, lam), v in c.items():
        groups.setdefault((j, lam[0]), []).append((lam[1:], v))
    blocks = {}
    for key, rows in groups.items():
        ks = np.array([r[0] for r in rows], dtype=int)
        lo = ks.min(axis=0)
        hi = ks.max(axis=0)
        arr = np.zeros(hi - lo + 1)
        for k, v in rows:
            arr[tuple(np.array(k) - lo)] += v
        blocks[key] = (arr, tuple(int(x) for x in lo))
    return blocks


def analyze(system: WaveletSystem, f: DyadicGrid, max_level: int | None = None) -> CoefficientArray:
    """Coefficients ``<f, dual psi_{j,lam}>`` for levels -1..max_level.

    ``f`` is interpreted as the element of the primal multiresolution space
    at the sampling level that interpolates the zero-extended samples.
    """
    if f.dimension != system.dimension:
        raise ConfigurationError(f"grid dimension {f.dimension} != system dimension {system.dimension}")
    L = f.level
    if max_level is None:
        max_level = L - 1
    if max_level > L:
        raise ResolutionError(f"max_level {max_level} exceeds sampling level {L}")
    d = system.dimension
    scale = 2.0 ** (-L * d / 2)
    start = tuple(n0 - system.shift for n0 in f.first_node)
    block = (np.asarray(f.values, dtype=float) * scale, start)
    entries = {}
    for level in range(L - 1, -1, -1):
        bands = _decompose(block, system)
        block = bands[0]
        if level <= max_level:
            for i in range(1, 2**d):
                _block_entries(bands[i], level, i, entries)
    _block_entries(block, -1, 0, entries)
    return CoefficientArray(entries, d)


def _down_periodic(arr: np.ndarray, filt: Filter) -> np.ndarray:
    """out[k] = sum_m filt[m] arr[(2k + m) mod len(arr)]."""
    P = arr.size
    idx = 2 * np.arange(P // 2)
    out = np.zeros(P // 2)
    for t, coef in enumerate(filt.taps):
        if coef != 0.0:
            out += coef * arr[(idx + filt.start + t) % P]
    return out


def periodic_analyze(system: WaveletSystem, samples) -> CoefficientArray:
    """Periodized-wavelet coefficients of one period of 1-periodic data.

    ``samples`` holds ``f(m 2^-L)``, ``m = 0..2^L - 1``.  Shifts run over
    ``0 <= k < 2^j`` and level -1 carries the single level-0 scaling coefficient.
    """
    if system.dimension != 1:
        raise ConfigurationError("periodic analysis is implemented for d = 1")
    v = np.asarray(samples, dtype=float)
    L = int(round(math.log2(v.size))) if v.size else -1
    if L < 0 or 1 << L != v.size:
        raise ConfigurationError("periodic samples must have length 2^L")
    arr = np.roll(v, -system.shift) * 2.0 ** (-L / 2)
    entries = {}
    for level in range(L - 1, -1, -1):
        detail = _down_periodic(arr, system.dual_highpass)
        arr = _down_periodic(arr, system.dual_lowpass)
        entries.update({(level, (1, k)): float(x) for k, x in enumerate(detail)})
    entries[(-1, (0, 0))] = float(arr[0])
    return CoefficientArray._trusted(entries, 1)


def synthesize(system: WaveletSystem, c: CoefficientArray, out_grid: DyadicGrid) -> DyadicGrid:
    """Sample ``sum c_{j,lam} psi_{j,lam}`` on the nodes of ``out_grid``."""
    d = system.dimension
    if c.dimension != d:
        raise ConfigurationError("coefficient dimension does not match the system")
    Lout = out_grid.level
    if len(c) == 0:
        return DyadicGrid.zeros(Lout, out_grid.box)
    M = max(Lout, c.max_level + 1, 0)
    blocks = _group_blocks(c)
    scaling = blocks.get((-1, 0))
    for level in range(0, M):
        details = {i: blocks[(level, i)] for i in range(1, 2**d) if (level, i) in blocks}
        if scaling is None and not details:
            continue
        scaling = _reconstruct_level(scaling, details, system, d)
    arr, start = scaling
    arr = arr * 2.0 ** (M * d / 2)
    step = 1 << (M - Lout)
    idx = []
    for axis, (n0, size) in enumerate(zip(out_grid.first_node, out_grid.values.shape)):
        fine = (n0 + np.arange(size)) * step - system.shift - start[axis]
        idx.append(fine)
    out = np.zeros(out_grid.values.shape)
    valid = [(ix >= 0) & (ix < arr.shape[a]) for a, ix in enumerate(idx)]
    if all(v.any() for v in valid):
        sub = arr[np.ix_(*[ix[v] for ix, v in zip(idx, valid)])]
        out[np.ix_(*[np.nonzero(v)[0] for v in valid])] = sub
    return DyadicGrid(Lout, out_grid.box, out)


# --------------------------------------------------------------------------
# cascade evaluation
# --------------------------------------------------------------------------

_WHICH = {
    "phi": ("primal", "scaling"),
    "psi": ("primal", "wavelet"),
    "dual_phi": ("dual", "scaling"),
    "dual_psi": ("dual", "wavelet"),
}


def _cascade_1d(system: WaveletSystem, side: str, kind: str, level: int):
    """Values at nodes ``n 2^-level`` as (first node, array)."""
    h = system.lowpass(side)
    if kind == "scaling":
        arr, start = np.array([1.0]), 0
        steps = level
    else:
        if level < 1:
            raise ResolutionError("wavelet cascade needs level >= 1")
        g = system.highpass(side)
        arr, start = np.array(g.taps), g.start
        steps = level - 1
    for _ in range(steps):
        arr, start = _up(arr, start, h, 0)
    vals = arr * 2.0 ** (level / 2)
    if not np.all(np.isfinite(vals)):
        raise NumericError("cascade diverged")
    return start + system.shift, vals


def _atom_1d_on_nodes(system, side, kind, j, k, nodes: np.ndarray, J: int):
    """``2^{j/2} gen(2^j x - k)`` at x = nodes * 2^-J (1D)."""
    level_j = max(j, 0)
    need = 1 if kind == "wavelet" else 0
    Lg = max(need, J - level_j, 0)
    first, vals = _cascade_1d(system, side, kind, Lg)
    # gen argument y = n 2^{level_j - J} - k; node index at level Lg is y 2^Lg
    m = (nodes.astype(np.int64) << (Lg + level_j - J)) - (k << Lg)
    pos = m - first
    out = np.zeros(len(nodes))
    ok = (pos >= 0) & (pos < len(vals))
    out[ok] = vals[pos[ok]]
    return out * 2.0 ** (level_j / 2)


def evaluate_atom(system: WaveletSystem, which: str, j: int, lam, grid: DyadicGrid) -> DyadicGrid:
    """Sample ``psi_{j,lam}`` (``which`` 'primal' or 'dual') on the grid nodes."""
    side = "primal" if which in ("primal", "phi", "psi") else "dual"
    lam = tuple(lam)
    i, k = lam[0], lam[1:]
    factors = []
    for axis, (n0, size) in enumerate(zip(grid.first_node, grid.values.shape)):
        kind = "wavelet" if (j >= 0 and (i >> axis) & 1) else "scaling"
        nodes = n0 + np.arange(size)
        factors.append(_atom_1d_on_nodes(system, side, kind, j, int(k[axis]), nodes, grid.level))
    vals = factors[0]
    for fac in factors[1:]:
        vals = np.multiply.outer(vals, fac)
    return grid.with_values(vals)


def evaluate_generator(system: WaveletSystem, which: str, grid: DyadicGrid, i: int = 1) -> DyadicGrid:
    """Sample a generator by the cascade algorithm.

    ``which`` is one of ``phi``, ``psi``, ``dual_phi``, ``dual_psi``; ``i``
    selects the wavelet type in 2D.  Values outside the support are exactly 0.
    """
    if which not in _WHICH:
        raise ConfigurationError(f"unknown generator {which!r}; use one of {sorted(_WHICH)}")
    side, kind = _WHICH[which]
    d = system.dimension
    if kind == "scaling":
        return evaluate_atom(system, side, -1, (0,) + (0,) * d, grid)
    if not 1 <= i < 2**d:
        raise ConfigurationError(f"wavelet type {i} out of range for d={d}")
    return evaluate_atom(system, side, 0, (i,) + (0,) * d, grid)


# --------------------------------------------------------------------------
# moments, inner products
# --------------------------------------------------------------------------


def _scaling_moments(h: Filter, order: int) -> list:
    m = [sum(h[k] * k**r for k in h.indices()) / SQRT2 for r in range(order + 1)]
    mu = [1.0]
    for n in range(1, order + 1):
        acc = sum(comb(n, l) * m[n - l] * mu[l] for l in range(n))
        mu.append(2.0**-n * acc / (1.0 - 2.0**-n))
    return mu


def exact_moments(system: WaveletSystem, side: str, kind: str, order: int) -> list:
    """``int x^n gen(x) dx`` for n = 0..order from the refinement equation (1D)."""
    h = system.lowpass(side)
    mu = _scaling_moments(h, order)
    if kind == "scaling":
        return mu
    g = system.highpass(side)
    out = []
    for n in range(order + 1):
        acc = sum(g[k] * sum(comb(n, l) * k ** (n - l) * mu[l] for l in range(n + 1))
                  for k in g.indices())
        out.append(2.0**-n * acc / SQRT2)
    return out


def _gauss_moments_1d(system, side, kind, order, level=10, npts=8):
    """Composite Gauss-Legendre moments of the cascade interpolant.

    Cells of width 2^-level between cascade nodes; the interpolant is
    piecewise constant for order-1 splines and piecewise linear otherwise.
    """
    first, vals = _cascade_1d(system, side, kind, level)
    h = 2.0**-level
    nodes = (first - 1 + np.arange(len(vals) + 2)) * h  # a zero node on each side
    v = np.concatenate([[0.0], vals, [0.0]])
    xg, wg = np.polynomial.legendre.leggauss(npts)
    t = (xg + 1) / 2
    x = nodes[:-1, None] + h * t[None, :]
    hold = system.lowpass("primal").end - system.lowpass("primal").start == 1
    if hold:
        fv = v[:-1, None] * np.ones_like(t)[None, :]
    else:
        fv = v[:-1, None] * (1 - t[None, :]) + v[1:, None] * t[None, :]
    w = wg / 2 * h
    return [float(np.sum(x**n * fv * w[None, :])) for n in range(order + 1)]


def vanishing_moments_check(system: WaveletSystem, order: int, side: str = "primal",
                            level: int = 10) -> dict:
    """``|int x^alpha psi_i|`` for all |alpha| <= order, by composite quadrature.

    Returns ``{(i, alpha): residual}``; ``alpha`` is a tuple with one entry per
    axis.
    """
    d = system.dimension
    mom = {kind: _gauss_moments_1d(system, side, kind, order, level)
           for kind in ("scaling", "wavelet")}
    out = {}
    for i in range(1, 2**d):
        for alpha in product(range(order + 1), repeat=d):
            if sum(alpha) > order:
                continue
            val = 1.0
            for axis, a in enumerate(alpha):
                kind = "wavelet" if (i >> axis) & 1 else "scaling"
                val *= mom[kind][a]
            out[(i, alpha)] = abs(val)
    return out


def inner_product(system: WaveletSystem, primal: tuple, dual: tuple, level: int | None = None) -> float:
    """``<psi_{j,lam}, dual psi_{j',lam'}>`` by cascade quadrature.

    ``primal`` and ``dual`` are ``(j, lam)`` keys.  The primal atom is sampled
    exactly at level ``level`` and paired with the dual cascade samples.
    """
    (j1, lam1), (j2, lam2) = primal, dual
    d = system.dimension
    if level is None:
        level = max(j1, j2, 0) + 3
    total = 1.0
    for axis in range(d):
        k1, k2 = lam1[1 + axis], lam2[1 + axis]
        kind1 = "wavelet" if (j1 >= 0 and (lam1[0] >> axis) & 1) else "scaling"
        kind2 = "wavelet" if (j2 >= 0 and (lam2[0] >> axis) & 1) else "scaling"
        s1 = system.atom_support(j1, (1 if kind1 == "wavelet" else 0, k1), "primal")[0]
        s2 = system.atom_support(j2, (1 if kind2 == "wavelet" else 0, k2), "dual")[0]
        lo = math.floor(min(s1[0], s2[0]) * 2**level) - 1
        hi = math.ceil(max(s1[1], s2[1]) * 2**level) + 1
        nodes = np.arange(lo, hi + 1)
        a = _atom_1d_on_nodes(system, "primal", kind1, j1, k1, nodes, level)
        b = _atom_1d_on_nodes(system, "dual", kind2, j2, k2, nodes, level)
        total *= float(np.dot(a, b)) * 2.0**-level
    return total


def scaling_gram(system: WaveletSystem) -> dict:
    """``a_k = <phi, dual_phi(. - k)>`` from the refinement eigenproblem.

    Biorthogonality of the scaling functions means ``a_k = delta_k``.
    """
    h, hd = system.primal_lowpass, system.dual_lowpass
    lo = h.start - hd.end
    hi = h.end - hd.start
    ks = list(range(lo, hi + 1))
    idx = {k: n for n, k in enumerate(ks)}
    T = np.zeros((len(ks), len(ks)))
    for k in ks:
        for m in h.indices():
            for l in hd.indices():
                q = 2 * k + l - m
                if q in idx:
                    T[idx[k], idx[q]] += h[m] * hd[l]
    w, V = np.linalg.eig(T)
    sel = int(np.argmin(np.abs(w - 1.0)))
    v = np.real(V[:, sel])
    v = v / v.sum()
    return {k: float(v[idx[k]]) for k in ks}
