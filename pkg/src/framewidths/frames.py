"""Frame pairs over weighted sequence spaces on finite-dimensional models.

A model space is R^D with inner product ``(f, g) = f^T M g`` for a symmetric
positive definite ``M`` (identity by default).  A frame pair stores the
analysis functionals as the rows of ``H`` (so the coefficients of ``f`` are
``H f``) and the synthesis atoms as the columns of ``G``.  Constants follow

    A ||Hf||_w <= ||f|| <= B ||Hf||_w,
    A' ||(Hf)_Lam||_w <= ||G_Lam (Hf)_Lam||    for f in K,

and ``B`` also bounds the synthesis operator ``c -> G c`` from l2_w.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .errors import (
    AdmissibilityError,
    ConfigurationError,
    InvertibilityError,
    ParameterError,
    SpectralError,
    UsageError,
)
from .wavelets import CoefficientArray

__all__ = [
    "FramePair",
    "FiniteSection",
    "ThresholdResult",
    "reconstruct",
    "estimate_frame_bounds",
    "check_stability",
    "singleton_subsets",
    "random_subsets",
    "map_frame_pair",
    "pathological_frame",
    "tight_duplicate",
    "tight_growing",
    "orthonormal_frame",
    "riesz_basis_frame",
    "load_frame_pair",
    "soft_threshold",
    "soft_threshold_map",
    "continuous_n_term",
    "n_term_error",
]


def _sqrtm_spd(M: np.ndarray):
    """``M^{1/2}`` and ``M^{-1/2}`` for symmetric positive definite ``M``."""
    vals, vecs = linalg.eigh(M)
    if vals.min() <= 0:
        raise ConfigurationError("metric must be positive definite")
    root = (vecs * np.sqrt(vals)) @ vecs.T
    inv_root = (vecs / np.sqrt(vals)) @ vecs.T
    return root, inv_root


@dataclass(frozen=True, eq=False)
class FiniteSection:
    """Finite truncation used for spectral estimates.

    ``analysis`` holds the sqrt(w)-scaled functionals evaluated on an
    orthonormal basis of the section's span; ``gram`` is the Gram matrix of
    the w^{-1/2}-scaled atoms.
    """

    indices: tuple
    analysis: np.ndarray
    gram: np.ndarray

    def __post_init__(self):
        an = np.asarray(self.analysis, dtype=float)
        gr = np.asarray(self.gram, dtype=float)
        if an.ndim != 2 or gr.shape != (an.shape[0], an.shape[0]):
            raise ConfigurationError(f"inconsistent section shapes {an.shape}, {gr.shape}")
        if not (np.all(np.isfinite(an)) and np.all(np.isfinite(gr))):
            raise ConfigurationError("section matrices must be finite")
        if len(self.indices) != an.shape[0]:
            raise ConfigurationError("index list does not match analysis rows")
        object.__setattr__(self, "analysis", an)
        object.__setattr__(self, "gram", gr)

    def synthesis_bound(self) -> float:
        return float(math.sqrt(max(linalg.eigvalsh(self.gram).max(), 0.0)))


@dataclass(frozen=True, eq=False)
class FramePair:
    analysis: np.ndarray  # K x D
    atoms: np.ndarray  # D x K
    weight: np.ndarray  # K
    A: float
    B: float
    A_prime: float
    C: float | None = None
    metric: np.ndarray | None = None
    labels: tuple | None = None
    stable_basis: np.ndarray | None = None  # columns span K
    name: str = "frame"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        H = np.asarray(self.analysis, dtype=float)
        G = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weight, dtype=float)
        if H.ndim != 2 or G.shape != (H.shape[1], H.shape[0]) or w.shape != (H.shape[0],):
            raise ConfigurationError(f"shapes analysis {H.shape}, atoms {G.shape}, weight {w.shape}")
        if np.any(~(w > 0)):
            raise ParameterError("weights must be positive")
        if not (self.A > 0 and self.B > 0 and self.A_prime > 0):
            raise ParameterError("frame constants must be positive")
        if self.A > self.B * (1 + 1e-9):
            raise ParameterError(f"A = {self.A} exceeds B = {self.B}")
        if self.C is not None and self.B / min(self.A, self.A_prime) > self.C * (1 + 1e-12):
            raise AdmissibilityError(
                f"B/min(A, A') = {self.B / min(self.A, self.A_prime):.6g} exceeds C = {self.C}")
        for arr in (H, G, w):
            arr.setflags(write=False)
        object.__setattr__(self, "analysis", H)
        object.__setattr__(self, "atoms", G)
        object.__setattr__(self, "weight", w)
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(range(H.shape[0])))

    # -- construction -----------------------------------------------------
    @classmethod
    def from_matrices(cls, analysis, atoms, weight=None, metric=None, A_prime=None, C=None,
                      labels=None, stable_basis=None, name="frame", meta=None) -> "FramePair":
        """Build a pair and measure ``A`` and ``B`` on the full finite model."""
        H = np.asarray(analysis, dtype=float)
        w = np.ones(H.shape[0]) if weight is None else np.asarray(weight, dtype=float)
        probe = cls(H, atoms, w, 1.0, 1.0, 1.0, None, metric, labels, stable_basis, name, dict(meta or {}))
        A, B_an = estimate_frame_bounds(probe.section())
        B = max(B_an, probe.section().synthesis_bound())
        return replace(probe, A=A, B=B, A_prime=A if A_prime is None else A_prime, C=C)

    # -- basic maps -------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.analysis.shape[1]

    @property
    def size(self) -> int:
        return self.analysis.shape[0]

    def _metric(self):
        return np.eye(self.dim) if self.metric is None else np.asarray(self.metric, dtype=float)

    def norm(self, f) -> float:
        f = np.asarray(f, dtype=float)
        if self.metric is None:
            return float(np.linalg.norm(f))
        return float(math.sqrt(max(f @ self._metric() @ f, 0.0)))

    def coefficients(self, f) -> np.ndarray:
        return self.analysis @ np.asarray(f, dtype=float)

    def synthesize(self, c, subset=None) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if subset is None:
            return self.atoms @ c
        subset = np.asarray(subset, dtype=int)
        return self.atoms[:, subset] @ c[subset]

    def coeff_norm(self, c, subset=None) -> float:
        c = np.asarray(c, dtype=float)
        if subset is not None:
            subset = np.asarray(subset, dtype=int)
            return float(math.sqrt(np.sum(self.weight[subset] * c[subset] ** 2)))
        return float(math.sqrt(np.sum(self.weight * c**2)))

    def to_coefficient_array(self, c, dimension=1) -> CoefficientArray:
        return CoefficientArray(dict(zip(self.labels, np.asarray(c, dtype=float))), dimension)

    def section(self, rows=None, subspace=None) -> FiniteSection:
        """Finite section on ``rows`` and the span of ``subspace`` (columns)."""
        rows = np.arange(self.size) if rows is None else np.asarray(rows, dtype=int)
        M = self._metric()
        if subspace is None:
            _, basis = _sqrtm_spd(M)
        else:
            V = np.asarray(subspace, dtype=float)
            # M-orthonormal basis of span(V)
            L = linalg.cholesky(V.T @ M @ V, lower=True)
            basis = linalg.solve_triangular(L, V.T, lower=True).T
        sw = np.sqrt(self.weight[rows])
        T = sw[:, None] * (self.analysis[rows] @ basis)
        Gs = self.atoms[:, rows] / sw[None, :]
        return FiniteSection(tuple(self.labels[i] for i in rows), T, Gs.T @ M @ Gs)

    @property
    def admissibility_ratio(self) -> float:
        return self.B / min(self.A, self.A_prime)


# -- spectral estimates ---------------------------------------------------


def estimate_frame_bounds(section: FiniteSection, rtol: float = 1e-12) -> tuple:
    """``(A_hat, B_hat)`` as reciprocal extreme singular values of the section."""
    T = section.analysis
    if T.size == 0:
        raise SpectralError("empty section")
    sv = linalg.svdvals(T)
    smax = sv.max()
    smin = sv.min() if T.shape[0] >= T.shape[1] else 0.0
    if smax == 0 or smin <= rtol * smax:
        raise SpectralError(
            f"rank-deficient section: {T.shape[0]} functionals on a {T.shape[1]}-dim span, "
            f"singular values in [{smin:.3e}, {smax:.3e}]")
    return float(1.0 / smax), float(1.0 / smin)


def singleton_subsets(frame: FramePair) -> list:
    return [[k] for k in range(frame.size)]


def random_subsets(frame: FramePair, count: int, rng: np.random.Generator, max_size=None) -> list:
    max_size = frame.size if max_size is None else max_size
    out = []
    for _ in range(count):
        size = int(rng.integers(1, max_size + 1))
        out.append(sorted(rng.choice(frame.size, size=size, replace=False).tolist()))
    return out


def check_stability(frame: FramePair, subsets, probes) -> float:
    """Smallest ratio ``||G_Lam a_Lam|| / ||a_Lam||_w`` over subsets and probes."""
    probes = list(probes)
    if not probes:
        raise UsageError("check_stability needs at least one probe")
    best = math.inf
    coeffs = [frame.coefficients(f) for f in probes]
    for sub in subsets:
        sub = np.asarray(sub, dtype=int)
        for c in coeffs:
            den = frame.coeff_norm(c, sub)
            if den == 0.0:
                continue
            best = min(best, frame.norm(frame.synthesize(c, sub)) / den)
    if not math.isfinite(best):
        raise UsageError("all probes have zero coefficients on the given subsets")
    return best


def n_term_error(frame: FramePair, f, n: int) -> tuple:
    """Canonical n-term error keeping the ``n`` largest ``sqrt(w)|<f,h_k>|``."""
    c = frame.coefficients(f)
    order = np.argsort(-np.sqrt(frame.weight) * np.abs(c), kind="stable")
    keep = np.sort(order[:n])
    return frame.norm(np.asarray(f, dtype=float) - frame.synthesize(c, keep)), keep


def reconstruct(frame: FramePair, f, max_terms: int | None = None) -> tuple:
    """Partial reconstruction from the ``max_terms`` largest weighted coefficients.

    Returns ``(approximation, residual norm)``.
    """
    f = np.asarray(f, dtype=float)
    n = frame.size if max_terms is None else int(max_terms)
    c = frame.coefficients(f)
    order = np.argsort(-np.sqrt(frame.weight) * np.abs(c), kind="stable")
    approx = frame.synthesize(c, np.sort(order[:n]))
    return approx, frame.norm(f - approx)


# -- isomorphisms ---------------------------------------------------------


def _operator_norm(S, M1, M2) -> float:
    r2, _ = _sqrtm_spd(M2)
    _, i1 = _sqrtm_spd(M1)
    return float(linalg.norm(r2 @ S @ i1, 2))


def map_frame_pair(frame: FramePair, S, norm_S=None, norm_S_inv=None, target_metric=None) -> FramePair:
    """Transport ``frame`` through the isomorphism ``S``.

    The mapped pair has analysis ``H S^{-1}`` and atoms ``S G``; its declared
    constants are ``A/||S^-1||``, ``B ||S||``, ``A'/||S^-1||`` and
    ``C ||S|| ||S^-1||``.
    """
    S = np.asarray(S, dtype=float)
    if S.shape != (frame.dim, frame.dim):
        raise ConfigurationError(f"S must be {frame.dim}x{frame.dim}")
    M1 = frame._metric()
    M2 = M1 if target_metric is None else np.asarray(target_metric, dtype=float)
    sv = linalg.svdvals(S)
    if sv.min() <= 1e-14 * sv.max():
        raise InvertibilityError(f"S is singular (condition number {sv.max() / max(sv.min(), 1e-300):.3e})")
    S_inv = linalg.inv(S)
    nS = _operator_norm(S, M1, M2) if norm_S is None else float(norm_S)
    nSi = _operator_norm(S_inv, M2, M1) if norm_S_inv is None else float(norm_S_inv)
    return FramePair(
        analysis=frame.analysis @ S_inv,
        atoms=S @ frame.atoms,
        weight=frame.weight,
        A=frame.A / nSi,
        B=frame.B * nS,
        A_prime=frame.A_prime / nSi,
        C=None if frame.C is None else frame.C * nS * nSi,
        metric=None if target_metric is None and frame.metric is None else M2,
        labels=frame.labels,
        stable_basis=None if frame.stable_basis is None else S @ frame.stable_basis,
        name=f"S({frame.name})",
        meta={**frame.meta, "norm_S": nS, "norm_S_inv": nSi},
    )


# -- model frames ---------------------------------------------------------


def orthonormal_frame(D: int) -> FramePair:
    I = np.eye(D)
    return FramePair(I, I, np.ones(D), 1.0, 1.0, 1.0, C=1.0, name="orthonormal")


def riesz_basis_frame(D: int, rng: np.random.Generator, spread: float = 0.25) -> FramePair:
    """Random Riesz basis: atoms ``G`` with singular values in ``[1-spread, 1+spread]``.

    Analysis rows are the dual basis, so the pair is stable on all of R^D with
    ``A = A' = sigma_min(G)``.
    """
    U, _ = linalg.qr(rng.standard_normal((D, D)))
    V, _ = linalg.qr(rng.standard_normal((D, D)))
    sig = rng.uniform(1 - spread, 1 + spread, D)
    G = (U * sig) @ V.T
    fp = FramePair.from_matrices(linalg.inv(G), G, name="riesz-basis")
    return replace(fp, A_prime=float(sig.min()), C=fp.B / min(fp.A, float(sig.min())))


def tight_duplicate(D: int) -> FramePair:
    """``{e1, e2/sqrt2, e2/sqrt2, e3, ..., eD}``: tight, stable with ``A' = 2^{-1/2}``."""
    if D < 2:
        raise ParameterError("tight duplicate frame needs D >= 2")
    rows = [np.eye(D)[0], np.eye(D)[1] / math.sqrt(2), np.eye(D)[1] / math.sqrt(2)]
    rows += [np.eye(D)[i] for i in range(2, D)]
    H = np.array(rows)
    return FramePair.from_matrices(H, H.T, A_prime=2**-0.5, name="tight-duplicate",
                                   labels=tuple(["e1", "e2a", "e2b"] + [f"e{i + 1}" for i in range(2, D)]))


def tight_growing(m: int) -> FramePair:
    """``e_i`` repeated ``i`` times with scale ``i^{-1/2}``, ``i = 1..m``."""
    rows, labels = [], []
    for i in range(m):
        for r in range(i + 1):
            rows.append(np.eye(m)[i] / math.sqrt(i + 1))
            labels.append((i + 1, r))
    H = np.array(rows)
    return FramePair.from_matrices(H, H.T, A_prime=m**-0.5, name="tight-growing", labels=tuple(labels))


@dataclass(frozen=True)
class PathologicalRecord:
    delta: float
    C: float
    epsilon: float
    distances: tuple  # best single-element distance per probe
    elements: tuple  # index of the best element per probe
    ratio_bound: float  # a priori bound on B/A
    measured_ratio: float

    @property
    def all_below(self) -> bool:
        return all(d < self.epsilon for d in self.distances)

    def to_dict(self) -> dict:
        return {"delta": self.delta, "C": self.C, "epsilon": self.epsilon,
                "distances": list(self.distances), "elements": list(self.elements),
                "ratio_bound": self.ratio_bound, "measured_B_over_A": self.measured_ratio,
                "all_below_epsilon": self.all_below}


def pathological_frame(K_samples, delta: float, C: float = 2.0, epsilon: float = 1e-3) -> tuple:
    """Orthonormal basis plus ``delta^i k_i``; every sample is 1-term approximable.

    Returns ``(frame, record)``.  The frame has analysis and canonical dual
    atoms, so reconstruction is exact.
    """
    K = np.atleast_2d(np.asarray(K_samples, dtype=float))
    if K.size == 0:
        raise ParameterError("K_samples must be nonempty")
    if not 0 < delta < 1:
        raise ParameterError("delta must lie in (0, 1)")
    if C < 1:
        raise ParameterError("C must be >= 1")
    n, D = K.shape
    kappa = float(np.max(np.linalg.norm(K, axis=1)))
    bound = math.sqrt(1 + kappa**2 * delta**2 / (1 - delta**2))
    if bound >= C:
        raise AdmissibilityError(
            f"delta = {delta} too large for C = {C}: B/A may reach {bound:.4g}; "
            f"need kappa^2 delta^2/(1 - delta^2) < C^2 - 1")
    scales = delta ** np.arange(1, n + 1)
    H = np.vstack([np.eye(D), scales[:, None] * K])
    G = linalg.solve(H.T @ H, H.T, assume_a="pos")
    labels = tuple([("e", i) for i in range(D)] + [("k", i + 1) for i in range(n)])
    frame = FramePair.from_matrices(H, G, labels=labels, C=C, name="pathological")
    # best single-element approximation of each probe among the analysis elements
    norms2 = np.sum(H**2, axis=1)
    dists, which = [], []
    for f in K:
        proj = (H @ f) ** 2 / norms2
        resid2 = np.maximum(f @ f - proj, 0.0)
        i = int(np.argmin(resid2))
        h = H[i]
        dists.append(float(np.linalg.norm(f - (h @ f) / norms2[i] * h)))
        which.append(i)
    record = PathologicalRecord(delta, C, epsilon, tuple(dists), tuple(which), bound,
                                frame.B / frame.A)
    return frame, record


def load_frame_pair(path) -> FramePair:
    """Frame pair from a JSON file.

    Keys: ``analysis`` (K rows of length D), ``atoms`` (D rows of length K),
    optional ``weight``, ``metric``, ``A_prime``, ``C``, ``labels``, ``name``.
    """
    with open(path) as fh:
        obj = json.load(fh)
    try:
        H = np.array(obj["analysis"], dtype=float)
        G = np.array(obj["atoms"], dtype=float)
    except KeyError as exc:
        raise ConfigurationError(f"frame file lacks {exc.args[0]!r}") from None
    labels = obj.get("labels")
    return FramePair.from_matrices(
        H, G, obj.get("weight"), obj.get("metric"), obj.get("A_prime"), obj.get("C"),
        None if labels is None else tuple(map(lambda x: tuple(x) if isinstance(x, list) else x, labels)),
        name=obj.get("name", str(path)))


# -- thresholding ---------------------------------------------------------


def soft_threshold(a, beta: float) -> np.ndarray:
    """Entrywise continuous threshold with dead zone ``beta`` and ramp to ``2 beta``."""
    if not beta > 0:
        raise ParameterError("beta must be positive")
    a = np.asarray(a, dtype=float)
    mag = np.abs(a)
    ramp = 2.0 * np.sign(a) * (mag - beta)
    return np.where(mag >= 2 * beta, a, np.where(mag <= beta, 0.0, ramp))


def soft_threshold_map(a: CoefficientArray, beta: float) -> CoefficientArray:
    return a.map_values(lambda v: soft_threshold(v, beta))


@dataclass(frozen=True)
class ThresholdResult:
    element: np.ndarray
    kept_count: int
    beta: float
    error: float
    bound: float
    target_not_certified: bool
    greedy_error: float
    coefficients: np.ndarray


def continuous_n_term(frame: FramePair, f, n: int, error_target: float, eps: float = 0.0) -> ThresholdResult:
    """Soft-threshold ``L_N`` at ``beta = (e + 4 eps)/sqrt(n)`` in stability-normalized coordinates.

    Coefficients are rescaled by ``A' sqrt(w)`` so the stability constant is 1;
    the guarantee is ``kept_count <= 2n`` and error at most
    ``2 B/min(A, A') (e + 4 eps)`` whenever the canonical greedy n-term error
    does not exceed ``e``.
    """
    if not error_target > 0:
        raise ParameterError("error target must be positive")
    if n < 1:
        raise ParameterError("n must be >= 1")
    f = np.asarray(f, dtype=float)
    c = frame.coefficients(f)
    scale = frame.A_prime * np.sqrt(frame.weight)
    beta = (error_target + 4 * eps) / math.sqrt(n)
    c_star = soft_threshold(scale * c, beta) / scale
    out = frame.synthesize(c_star)
    greedy, _ = n_term_error(frame, f, n)
    return ThresholdResult(
        element=out,
        kept_count=int(np.count_nonzero(c_star)),
        beta=beta,
        error=frame.norm(f - out),
        bound=2 * frame.B / min(frame.A, frame.A_prime) * (error_target + 4 * eps),
        target_not_certified=bool(greedy > error_target),
        greedy_error=greedy,
        coefficients=c_star,
    )
