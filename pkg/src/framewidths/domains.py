"""Frame pairs for H^s on bounded domains built from restricted wavelets.

Atoms are ``chi_Omega psi_{j,lam}`` and analysis functionals are
``f -> <E f, dual psi_{j,lam}>`` for a linear extension operator ``E``.
Index sets keep every shift whose dual wavelet can meet the support of
``E f``.  Balls ``B(x0, R)`` use the sup-norm, so they are cubes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy import sparse

from .besov import BesovParams, IndexFamily, Weight, besov_seq_norm, greedy_n_term
from .errors import (
    CoefficientIndexError,
    ConfigurationError,
    GeometryError,
    RegularityError,
)
from .frames import FramePair
from .wavelets import (
    CoefficientArray,
    DyadicGrid,
    WaveletSystem,
    analyze,
    evaluate_atom,
    synthesize,
)

__all__ = [
    "Domain",
    "ExtensionOperator",
    "DomainFramePair",
    "domain_preset",
    "load_domain",
    "build_index_sets",
    "extend",
    "build_domain_frame_pair",
    "domain_analysis",
    "domain_synthesis",
    "hs_norm_estimate",
    "sigma_n_frame",
    "stable_box_subframe",
    "grid_metric",
    "riesz_lower_bound",
    "smooth_step",
]


def _frac(v) -> Fraction:
    return Fraction(v).limit_denominator(1 << 40) if not isinstance(v, str) else Fraction(v)


def _is_dyadic(v: Fraction) -> bool:
    den = v.denominator
    return den & (den - 1) == 0


def smooth_step(t):
    """C-infinity step: 1 for t <= 0, 0 for t >= 1, all derivatives flat at both ends."""
    t = np.asarray(t, dtype=float)

    def g(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    a, b = g(1.0 - t), g(t)
    return a / (a + b)


@dataclass(frozen=True, eq=False)
class Domain:
    """Bounded open set: a union of open intervals (d=1) or an axis-aligned polygon (d=2)."""

    dimension: int
    intervals: tuple = ()
    polygon: tuple = ()
    name: str = "domain"

    def __post_init__(self):
        if self.dimension == 1:
            ivs = sorted((_frac(a), _frac(b)) for a, b in self.intervals)
            if not ivs:
                raise ConfigurationError("1D domain needs at least one interval")
            for (a, b), nxt in zip(ivs, ivs[1:] + [None]):
                if not a < b:
                    raise ConfigurationError(f"empty interval ({a}, {b})")
                if nxt is not None and not b < nxt[0]:
                    raise ConfigurationError("intervals must be disjoint with positive gaps")
            object.__setattr__(self, "intervals", tuple(ivs))
        elif self.dimension == 2:
            verts = [(_frac(x), _frac(y)) for x, y in self.polygon]
            if len(verts) < 4:
                raise ConfigurationError("polygon needs at least 4 vertices")
            for p, q in zip(verts, verts[1:] + verts[:1]):
                if p[0] != q[0] and p[1] != q[1]:
                    raise ConfigurationError(f"edge {p}-{q} is not axis-aligned")
            object.__setattr__(self, "polygon", tuple(verts))
        else:
            raise ConfigurationError(f"unsupported dimension {self.dimension}")
        for v in self._vertex_values():
            if not _is_dyadic(v):
                raise ConfigurationError(f"vertex coordinate {v} is not dyadic")

    def _vertex_values(self):
        if self.dimension == 1:
            return [v for iv in self.intervals for v in iv]
        return [c for p in self.polygon for c in p]

    # geometry ------------------------------------------------------------
    @property
    def bbox(self) -> tuple:
        if self.dimension == 1:
            return ((self.intervals[0][0], self.intervals[-1][1]),)
        xs = [p[0] for p in self.polygon]
        ys = [p[1] for p in self.polygon]
        return ((min(xs), max(xs)), (min(ys), max(ys)))

    @property
    def center(self) -> tuple:
        return tuple((lo + hi) / 2 for lo, hi in self.bbox)

    @property
    def radius(self) -> Fraction:
        """Smallest R with Omega inside the sup-norm ball B(center, R)."""
        return max((hi - lo) / 2 for lo, hi in self.bbox)

    @property
    def vertex_level(self) -> int:
        return max(int(v.denominator).bit_length() - 1 for v in self._vertex_values())

    def _edges(self):
        v = self.polygon
        return list(zip(v, v[1:] + v[:1]))

    def on_boundary(self, *xs) -> np.ndarray:
        if self.dimension == 1:
            (x,) = xs
            out = np.zeros(np.shape(x), dtype=bool)
            for a, b in self.intervals:
                out |= np.isclose(x, float(a), rtol=0, atol=1e-12) | np.isclose(x, float(b), rtol=0, atol=1e-12)
            return out
        x, y = xs
        out = np.zeros(np.shape(x), dtype=bool)
        for (x1, y1), (x2, y2) in self._edges():
            x1, y1, x2, y2 = map(float, (x1, y1, x2, y2))
            if x1 == x2:
                out |= (np.abs(x - x1) < 1e-12) & (y >= min(y1, y2) - 1e-12) & (y <= max(y1, y2) + 1e-12)
            else:
                out |= (np.abs(y - y1) < 1e-12) & (x >= min(x1, x2) - 1e-12) & (x <= max(x1, x2) + 1e-12)
        return out

    def inside(self, *xs) -> np.ndarray:
        """Membership in the open set."""
        if self.dimension == 1:
            (x,) = xs
            out = np.zeros(np.shape(x), dtype=bool)
            for a, b in self.intervals:
                out |= (x > float(a) + 1e-12) & (x < float(b) - 1e-12)
            return out
        x, y = xs
        crossings = np.zeros(np.shape(x), dtype=int)
        for (x1, y1), (x2, y2) in self._edges():
            if x1 != x2:
                continue
            lo, hi = float(min(y1, y2)), float(max(y1, y2))
            crossings += ((float(x1) > x) & (y >= lo) & (y < hi)).astype(int)
        return (crossings % 2 == 1) & ~self.on_boundary(x, y)

    def closure(self, *xs) -> np.ndarray:
        return self.inside(*xs) | self.on_boundary(*xs)

    def nearest_boundary(self, *xs):
        """Nearest boundary point and Euclidean distance for each query point."""
        if self.dimension == 1:
            (x,) = xs
            ends = np.array([float(v) for iv in self.intervals for v in iv])
            idx = np.argmin(np.abs(x[..., None] - ends), axis=-1)
            p = ends[idx]
            return (p,), np.abs(x - p)
        x, y = xs
        best = np.full(np.shape(x), np.inf)
        px, py = np.zeros(np.shape(x)), np.zeros(np.shape(x))
        for (x1, y1), (x2, y2) in self._edges():
            x1, y1, x2, y2 = map(float, (x1, y1, x2, y2))
            cx = np.clip(x, min(x1, x2), max(x1, x2))
            cy = np.clip(y, min(y1, y2), max(y1, y2))
            dist = np.hypot(x - cx, y - cy)
            better = dist < best
            best = np.where(better, dist, best)
            px = np.where(better, cx, px)
            py = np.where(better, cy, py)
        return (px, py), best

    def box_strictly_inside(self, box) -> bool:
        """True when the closed box lies in Omega with positive distance to the boundary."""
        box = [(_frac(lo), _frac(hi)) for lo, hi in box]
        if len(box) != self.dimension:
            return False
        if self.dimension == 1:
            (lo, hi), = box
            return any(a < lo and hi < b for a, b in self.intervals)
        (bx0, bx1), (by0, by1) = box
        for (x1, y1), (x2, y2) in self._edges():
            if max(x1, x2) >= bx0 and min(x1, x2) <= bx1 and max(y1, y2) >= by0 and min(y1, y2) <= by1:
                return False
        cx, cy = float((bx0 + bx1) / 2), float((by0 + by1) / 2)
        return bool(self.inside(np.array([cx]), np.array([cy]))[0])

    def to_json(self) -> str:
        if self.dimension == 1:
            return json.dumps({"dimension": 1, "name": self.name,
                               "intervals": [[str(a), str(b)] for a, b in self.intervals]})
        return json.dumps({"dimension": 2, "name": self.name,
                           "polygon": [[str(x), str(y)] for x, y in self.polygon]})


_PRESETS = {
    "interval": dict(dimension=1, intervals=[(0, 1)]),
    "union-intervals": dict(dimension=1, intervals=[(0, Fraction(1, 4)), (Fraction(1, 2), 1)]),
    "square": dict(dimension=2, polygon=[(0, 0), (1, 0), (1, 1), (0, 1)]),
    "l-shape": dict(dimension=2, polygon=[(0, 0), (1, 0), (1, Fraction(1, 2)), (Fraction(1, 2), Fraction(1, 2)),
                                          (Fraction(1, 2), 1), (0, 1)]),
}


def domain_preset(name: str) -> Domain:
    if name not in _PRESETS:
        raise ConfigurationError(f"unknown domain preset {name!r}; choose from {sorted(_PRESETS)}")
    return Domain(name=name, **_PRESETS[name])


def load_domain(path) -> Domain:
    """Domain from JSON: ``{"dimension": 1, "intervals": [[a, b], ...]}`` or
    ``{"dimension": 2, "polygon": [[x, y], ...]}``; coordinates may be strings like "1/4"."""
    with open(path) as fh:
        obj = json.load(fh)
    d = int(obj.get("dimension", 0))
    if d == 1:
        return Domain(1, intervals=[tuple(map(_frac, iv)) for iv in obj["intervals"]],
                      name=obj.get("name", str(path)))
    if d == 2:
        return Domain(2, polygon=[tuple(map(_frac, p)) for p in obj["polygon"]],
                      name=obj.get("name", str(path)))
    raise ConfigurationError(f"domain file needs dimension 1 or 2, got {obj.get('dimension')!r}")


# -- index sets ------------------------------------------------------------


def _lambda_range(domain: Domain, N: int, j: int) -> list:
    """Integer ranges per axis of ``|2^-j k_i - x0_i| <= 2R + 2^-j N``."""
    R = domain.radius
    out = []
    for c in domain.center:
        lo = (c - 2 * R) * 2**j - N
        hi = (c + 2 * R) * 2**j + N
        out.append(range(math.ceil(lo), math.floor(hi) + 1))
    return out


def build_index_sets(domain: Domain, system: WaveletSystem, j_max: int) -> IndexFamily:
    from itertools import product

    if j_max < 0:
        raise ConfigurationError("j_max must be >= 0")
    d = domain.dimension
    levels = {}
    for j in range(-1, j_max + 1):
        ks = list(product(*_lambda_range(domain, system.support_radius, max(j, 0))))
        types = (0,) if j == -1 else range(1, 2**d)
        levels[j] = [(i, *k) for i in types for k in ks]
    return IndexFamily(levels, d, onset=min(2, j_max))


# -- extension -------------------------------------------------------------

_REFLECTION = {1: ((1.0, 1),), 2: ((3.0, 1), (-2.0, 2))}


@dataclass(frozen=True)
class ExtensionOperator:
    """``zero`` or ``even-reflection`` with a smooth cutoff.

    The reflected values fade to 0 at distance ``collar * R`` from Omega, so
    only a boundary layer of that width is read and functions supported
    farther inside are extended by zero.  ``order = 2`` uses the two-point
    reflection ``3 f(b - h) - 2 f(b - 2h)``, which also matches first
    derivatives (1D only).
    """

    method: str = "even-reflection"
    order: int = 1
    target_s: float = 0.0
    collar: float = 0.25

    def __post_init__(self):
        if self.method not in ("zero", "even-reflection"):
            raise ConfigurationError(f"unknown extension method {self.method!r}")
        if self.order not in _REFLECTION:
            raise ConfigurationError("reflection order must be 1 or 2")
        if not 0 < self.collar <= 1:
            raise ConfigurationError("collar must lie in (0, 1]")


def _extended_box(domain: Domain):
    R = domain.radius
    return tuple((c - 2 * R, c + 2 * R) for c in domain.center)


def _lookup(f: DyadicGrid, idx_nodes):
    """Values of ``f`` at integer node tuples (arrays), 0 outside its box."""
    pos = [np.asarray(n) - n0 for n, n0 in zip(idx_nodes, f.first_node)]
    ok = np.ones(np.shape(pos[0]), dtype=bool)
    for a, p in enumerate(pos):
        ok &= (p >= 0) & (p < f.values.shape[a])
    out = np.zeros(np.shape(pos[0]))
    out[ok] = f.values[tuple(p[ok] for p in pos)]
    return out


def extend(ext: ExtensionOperator, domain: Domain, f: DyadicGrid) -> DyadicGrid:
    """Extend grid samples on the closure of Omega to the box ``[x0 - 2R, x0 + 2R]^d``."""
    if f.dimension != domain.dimension:
        raise ConfigurationError("grid and domain dimensions differ")
    if f.level < domain.vertex_level:
        raise ConfigurationError(f"grid level {f.level} cannot resolve the domain vertices")
    out = DyadicGrid.zeros(f.level, _extended_box(domain))
    mesh = out.mesh()
    nodes = np.meshgrid(*[n0 + np.arange(s) for n0, s in zip(out.first_node, out.values.shape)],
                        indexing="ij")
    h = out.spacing
    inside = domain.closure(*mesh)
    vals = np.where(inside, _lookup(f, nodes), 0.0)
    flags = set()
    if ext.method == "zero":
        bnd = domain.on_boundary(*mesh)
        if ext.target_s >= 0.5 and np.any(np.abs(vals[bnd]) > 1e-12):
            flags.add("extension_not_smoothness_valid")
        return out.with_values(vals, frozenset(flags))
    R = float(domain.radius) * ext.collar
    if domain.dimension == 1:
        vals = vals + _reflect_1d(ext, domain, f, mesh[0], nodes[0], ~inside, R, h)
    else:
        if ext.order != 1:
            raise ConfigurationError("two-point reflection is only implemented in 1D")
        vals = vals + _reflect_2d(domain, f, mesh, nodes, ~inside, R, h)
    return out.with_values(vals, frozenset(flags))


def _reflect_1d(ext, domain, f, x, n, outside, R, h):
    ivs = [(float(a), float(b)) for a, b in domain.intervals]
    add = np.zeros_like(x)
    for idx, (a, b) in enumerate(ivs):
        width = b - a
        # right end b, exterior to the right
        gap = ivs[idx + 1][0] - b if idx + 1 < len(ivs) else math.inf
        rho = min(R, width / ext.order, gap / 2)
        sel = outside & (x > b) & (x < b + rho)
        if sel.any():
            dist = n[sel] - round(b / h)
            acc = sum(lam * _lookup(f, [round(b / h) - mu * dist]) for lam, mu in _REFLECTION[ext.order])
            add[sel] += smooth_step(dist * h / rho) * acc
        gap = a - ivs[idx - 1][1] if idx > 0 else math.inf
        rho = min(R, width / ext.order, gap / 2)
        sel = outside & (x < a) & (x > a - rho)
        if sel.any():
            dist = round(a / h) - n[sel]
            acc = sum(lam * _lookup(f, [round(a / h) + mu * dist]) for lam, mu in _REFLECTION[ext.order])
            add[sel] += smooth_step(dist * h / rho) * acc
    return add


def _reflect_2d(domain, f, mesh, nodes, outside, R, h):
    x, y = mesh[0][outside], mesh[1][outside]
    (px, py), dist = domain.nearest_boundary(x, y)
    rx, ry = 2 * px - x, 2 * py - y
    use_reflected = domain.closure(rx, ry)
    qx = np.where(use_reflected, rx, px)
    qy = np.where(use_reflected, ry, py)
    vals = _lookup(f, [np.rint(qx / h).astype(int), np.rint(qy / h).astype(int)])
    add = np.zeros(mesh[0].shape)
    add[outside] = smooth_step(dist / R) * vals
    return add


# -- grid metrics ------------------------------------------------------------


def _is_hold(system: WaveletSystem) -> bool:
    lp = system.primal_lowpass
    return lp.end - lp.start == 1


def grid_metric(domain: Domain, level: int, s: float, hold: bool):
    """Exact ``H^s(Omega)`` Gram matrix (s in {0, 1}) of level-``level`` interpolants.

    Returns ``(mask, M)``: ``mask`` marks the bounding-box grid nodes that carry
    degrees of freedom, ``M`` is the dense Gram matrix on those nodes.  Cells
    count when their centre lies in Omega.
    """
    if s not in (0, 1):
        raise ConfigurationError(f"grid metric is available for s in {{0, 1}}, got {s}")
    if hold and s != 0:
        raise ConfigurationError("piecewise constant interpolants have no H^1 norm")
    grid = DyadicGrid.zeros(level, domain.bbox)
    shape = grid.values.shape
    h = grid.spacing
    d = domain.dimension
    coords = grid.coords()
    mids = [c[:-1] + h / 2 for c in coords]
    cell_in = domain.inside(*np.meshgrid(*mids, indexing="ij"))
    m1 = h / 6 * np.array([[2.0, 1.0], [1.0, 2.0]])
    k1 = 1 / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
    if d == 1:
        local = {"mass": m1, "stiff": k1}
    else:
        local = {"mass": np.kron(m1, m1), "stiff": np.kron(k1, m1) + np.kron(m1, k1)}
    flat = np.arange(np.prod(shape)).reshape(shape)
    cells = np.argwhere(cell_in)
    if hold:
        diag = np.zeros(flat.size)
        for c in cells:
            diag[flat[tuple(c)]] += h**d
        mask = (diag > 0).reshape(shape)
        return mask, np.diag(diag[mask.ravel()])
    corners = [np.array(off) for off in np.ndindex(*(2,) * d)]
    elem = local["mass"] + (local["stiff"] if s == 1 else 0.0)
    rows, cols, data = [], [], []
    for c in cells:
        ids = [flat[tuple(c + off)] for off in corners]
        for a, ia in enumerate(ids):
            for b, ib in enumerate(ids):
                rows.append(ia)
                cols.append(ib)
                data.append(elem[a, b])
    M = sparse.coo_matrix((data, (rows, cols)), shape=(flat.size, flat.size)).tocsr()
    used = np.zeros(flat.size, dtype=bool)
    used[np.unique(rows)] = True
    mask = used.reshape(shape)
    return mask, M[used][:, used].toarray()


# -- the frame pair ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DomainFramePair:
    system: WaveletSystem
    domain: Domain
    extension: ExtensionOperator
    index: IndexFamily
    s: float
    j_max: int
    level: int  # sampling level of grid functions
    stable_box: tuple | None = None
    meta: dict = field(default_factory=dict)

    @property
    def weight(self) -> Weight:
        return Weight.sobolev(self.s)

    @property
    def params(self) -> BesovParams:
        return BesovParams(self.s, 2, 2, self.domain.dimension)

    def grid(self) -> DyadicGrid:
        """Empty sampling grid on the bounding box of Omega."""
        return DyadicGrid.zeros(self.level, self.domain.bbox)

    def sample(self, func) -> DyadicGrid:
        g = self.grid()
        mesh = g.mesh()
        return g.with_values(np.where(self.domain.closure(*mesh), func(*mesh), 0.0))

    @cached_property
    def metric(self):
        return grid_metric(self.domain, self.level, self.s, _is_hold(self.system))

    @cached_property
    def frame(self) -> FramePair:
        """Finite frame pair on the grid model (dense matrices)."""
        mask, M = self.metric
        keys = list(self.index)
        g = self.grid()
        dofs = np.flatnonzero(mask.ravel())
        H = np.zeros((len(keys), len(dofs)))
        pos = {k: r for r, k in enumerate(keys)}
        for col, dof in enumerate(dofs):
            e = np.zeros(g.values.size)
            e[dof] = 1.0
            c = domain_analysis(self, g.with_values(e.reshape(g.values.shape)))
            for key, v in c.items():
                H[pos[key], col] = v
        G = np.zeros((len(dofs), len(keys)))
        for r, key in enumerate(keys):
            atom = domain_synthesis(self, CoefficientArray({key: 1.0}, self.domain.dimension))
            G[:, r] = atom.values.ravel()[dofs]
        w = self.weight.values_for(keys)
        stable, A_prime = None, None
        if self.stable_box is not None:
            star = self.stable_indices(self.stable_box)[0]
            if star:
                cols = [pos[k] for k in star]
                stable = G[:, cols]
                A_prime = _lower_riesz(stable, w[cols], M)
        return FramePair.from_matrices(H, G, w, metric=M, A_prime=A_prime, labels=tuple(keys),
                                       stable_basis=stable, name=f"domain({self.domain.name})")

    def stable_indices(self, box) -> tuple:
        """``nabla*`` (sorted keys) and its onset level for a box."""
        d = self.domain.dimension
        box = [(_frac(lo), _frac(hi)) for lo, hi in box]
        star = []
        for j, lams in self.index.levels.items():
            if j < 0:
                continue
            for lam in lams:
                sup = self.system.atom_support(j, lam, "primal")
                if all(box[a][0] <= sup[a][0] and sup[a][1] <= box[a][1] for a in range(d)):
                    star.append((j, lam))
        present = {j for j, _ in star}
        onset = None
        for j in range(self.j_max, -1, -1):
            if j in present:
                onset = j
            else:
                break
        return star, onset


def build_domain_frame_pair(system: WaveletSystem, domain: Domain, extension: ExtensionOperator | None = None,
                            s: float = 0.0, j_max: int | None = None, level: int | None = None,
                            stable_box=None) -> DomainFramePair:
    if system.dimension != domain.dimension:
        raise ConfigurationError("system and domain dimensions differ")
    if not system.r > abs(s):
        raise RegularityError(f"wavelet regularity r = {system.r:.4g} must exceed |s| = {abs(s):g}")
    if j_max is None:
        j_max = 8 if domain.dimension == 1 else 6
    level = j_max + 1 if level is None else level
    if level <= j_max:
        raise ConfigurationError("sampling level must exceed j_max")
    if level < domain.vertex_level:
        raise ConfigurationError("sampling level cannot resolve the domain vertices")
    if extension is None:
        extension = ExtensionOperator(target_s=s)
    if stable_box is not None and not domain.box_strictly_inside(stable_box):
        raise GeometryError(f"box {stable_box} does not keep a positive distance to the boundary")
    index = build_index_sets(domain, system, j_max)
    return DomainFramePair(system, domain, extension, index, float(s), j_max, level,
                           None if stable_box is None else tuple(map(tuple, stable_box)))


def domain_analysis(dfp: DomainFramePair, f: DyadicGrid) -> CoefficientArray:
    """``<E f, dual psi_{j,lam}>`` for ``(j, lam)`` in the index family."""
    Ef = extend(dfp.extension, dfp.domain, f)
    c = analyze(dfp.system, Ef, max_level=min(dfp.j_max, Ef.level - 1))
    return c.restrict(dfp.index)


def domain_synthesis(dfp: DomainFramePair, c: CoefficientArray, level: int | None = None) -> DyadicGrid:
    """``chi_Omega sum c psi`` on the bounding-box grid of Omega."""
    for key in c.keys():
        if key not in dfp.index:
            raise CoefficientIndexError(f"index {key} is not in the domain index family")
    level = dfp.level if level is None else level
    out = synthesize(dfp.system, c, DyadicGrid.zeros(level, dfp.domain.bbox))
    return out.with_values(np.where(dfp.domain.closure(*out.mesh()), out.values, 0.0))


def hs_norm_estimate(dfp: DomainFramePair, f: DyadicGrid, s: float | None = None) -> float:
    s = dfp.s if s is None else s
    if not dfp.system.r > abs(s):
        raise RegularityError(f"wavelet regularity r = {dfp.system.r:.4g} must exceed |s| = {abs(s):g}")
    return besov_seq_norm(domain_analysis(dfp, f), BesovParams(s, 2, 2, dfp.domain.dimension))


@dataclass(frozen=True)
class SigmaResult:
    error: float  # b^s_{2,2} tail norm
    indices: list
    grid_error: float  # norm of f minus the resynthesized n-term sum on Omega
    grid_norm: str
    truncation: float = 0.0  # b^s_{2,2} norm of the finest kept level, a proxy for the cut tail


def _grid_norm(dfp: DomainFramePair, g: DyadicGrid, s: float) -> tuple:
    hold = _is_hold(dfp.system)
    use_s = 1 if (s >= 1 and not hold) else 0
    if g.level != dfp.level:
        raise ConfigurationError("grid level differs from the frame pair level")
    mask, M = grid_metric(dfp.domain, dfp.level, use_s, hold)
    v = g.values[mask]
    return float(math.sqrt(max(v @ M @ v, 0.0))), ("H1" if use_s else "L2")


def sigma_n_frame(dfp: DomainFramePair, f: DyadicGrid, n: int, s: float | None = None) -> SigmaResult:
    """Greedy n-term approximation by the largest ``2^{js}``-weighted coefficients."""
    s = dfp.s if s is None else s
    if not dfp.system.r > abs(s):
        raise RegularityError(f"wavelet regularity r = {dfp.system.r:.4g} must exceed |s| = {abs(s):g}")
    c = domain_analysis(dfp, f)
    keep, err = greedy_n_term(c, n, Weight.sobolev(s))
    approx = domain_synthesis(dfp, c.restrict(set(keep)), f.level)
    gerr, name = _grid_norm(dfp, f.with_values(f.values - approx.values), s)
    top = c.restrict(lambda key: key[0] == dfp.j_max)
    trunc = besov_seq_norm(top, BesovParams(s, 2, 2, dfp.domain.dimension)) if len(top) else 0.0
    return SigmaResult(err, keep, gerr, name, trunc)


# -- stability ------------------------------------------------------------------


def riesz_lower_bound(system: WaveletSystem, j_min: int, j_max: int, s: float = 0.0,
                      width: int = 8, level: int | None = None) -> float:
    """Lower Riesz bound of ``{psi_{j,k}: j_min <= j <= j_max}`` on the line (1D).

    Uses every wavelet supported in ``[-width, width]`` (scaling functions
    too when ``j_min == -1``), measured in the exact ``H^s`` norm of level-``level``
    interpolants with weight ``2^{2js}``.
    """
    if system.dimension != 1:
        raise ConfigurationError("whole-line Riesz estimate is implemented for d = 1")
    level = j_max + 1 if level is None else level
    dom = Domain(1, intervals=[(-width - 1, width + 1)], name="line")
    mask, M = grid_metric(dom, level, s, _is_hold(system))
    g = DyadicGrid.zeros(level, dom.bbox)
    cols, ws = [], []
    for j in range(j_min, j_max + 1):
        lj = max(j, 0)
        for k in range(-width * 2**lj - 8, width * 2**lj + 8):
            lam = (0 if j == -1 else 1, k)
            a, b = system.atom_support(j, lam)[0]
            if a < -width or b > width:
                continue
            cols.append(evaluate_atom(system, "primal", j, lam, g).values[mask])
            ws.append(2.0 ** (2 * j * s))
    Gm = np.array(cols).T / np.sqrt(ws)
    ev = np.linalg.eigvalsh(Gm.T @ M @ Gm)
    return float(math.sqrt(max(ev.min(), 0.0)))


def _lower_riesz(G, w, M) -> float:
    """Smallest ratio ``||G a||_M / ||a||_w`` over all coefficient vectors."""
    scaled = G / np.sqrt(w)
    ev = np.linalg.eigvalsh(scaled.T @ M @ scaled)
    return float(math.sqrt(max(ev.min(), 0.0)))


@dataclass(frozen=True)
class StableBoxReport:
    indices: list
    onset: int | None
    A_prime: float  # spectral minimum over the nabla* section
    sampled_A_prime: float  # ratio minimum on random subsets and probes from K
    cardinalities: dict
    leakage: float = 0.0  # largest analysis coefficient outside nabla* for probes in K


def stable_box_subframe(dfp: DomainFramePair, box, n_probes: int = 20, seed: int = 0) -> StableBoxReport:
    """``nabla*`` for ``box`` and the stability constant on its span."""
    if not dfp.domain.box_strictly_inside(box):
        raise GeometryError(f"box {box} does not keep a positive distance to the boundary")
    star, onset = dfp.stable_indices(box)
    if not star:
        return StableBoxReport([], None, math.nan, math.nan, {})
    mask, M = dfp.metric
    g = dfp.grid()
    w = dfp.weight.values_for(star)
    cols = [evaluate_atom(dfp.system, "primal", j, lam, g).values[mask] for j, lam in star]
    Gs = np.array(cols).T
    spectral = _lower_riesz(Gs, w, M)
    # sampled check through the true analysis functionals on probes from K
    rng = np.random.default_rng(seed)
    pos = {k: i for i, k in enumerate(star)}
    sampled, leak = math.inf, 0.0
    for _ in range(n_probes):
        a = rng.standard_normal(len(star)) / np.sqrt(w)
        probe = np.zeros(g.values.shape)
        probe[mask] = Gs @ a
        c = domain_analysis(dfp, g.with_values(probe))
        vec = np.array([c[k] for k in star])
        leak = max(leak, max((abs(v) for k, v in c.items() if k not in pos), default=0.0))
        subsets = [np.arange(len(star))] + [
            np.sort(rng.choice(len(star), size=int(rng.integers(1, len(star) + 1)), replace=False))
            for _ in range(10)]
        for sub in subsets:
            part = Gs[:, sub] @ vec[sub]
            den = math.sqrt(np.sum(w[sub] * vec[sub] ** 2))
            if den > 0:
                sampled = min(sampled, math.sqrt(max(part @ M @ part, 0.0)) / den)
    counts = {}
    for j, _ in star:
        counts[j] = counts.get(j, 0) + 1
    return StableBoxReport(star, onset, spectral, sampled, counts, leak)
