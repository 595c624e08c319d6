"""Spectral solution operators: 1D Dirichlet Poisson and the single layer on the circle.

Periodic functions are stored by their Fourier coefficients ``c_k``,
``|k| <= K``, for ``f(x) = sum_k c_k e^{ikx}`` with the normalized measure
``dx / 2 pi``.  Dirichlet data on (0, 1) use the sine basis ``sin(k pi x)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft, integrate

from .besov import BesovParams
from .domains import smooth_step
from .errors import ConfigurationError, DomainError, ParameterError

__all__ = [
    "FourierCoefficients",
    "SineSeries",
    "SolutionOperator",
    "poisson_solve_1d",
    "poisson_residual",
    "single_layer_apply",
    "single_layer_solve",
    "single_layer_quadrature",
    "single_layer_multiplier",
    "lp_cutoff",
    "lp_block",
    "periodic_besov_norm",
]

_MEAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """Coefficients ``c_{-K} .. c_K`` stored in one complex array."""

    values: np.ndarray
    mean_zero: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size % 2 == 0:
            raise ConfigurationError("need an odd-length coefficient vector c_{-K..K}")
        object.__setattr__(self, "values", v)
        if self.mean_zero and abs(v[v.size // 2]) > _MEAN_TOL * max(1.0, np.abs(v).max()):
            raise DomainError("mean_zero is set but c_0 is not zero")

    @property
    def kmax(self) -> int:
        return self.values.size // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.kmax, self.kmax + 1)

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.kmax:
            return 0j
        return complex(self.values[k + self.kmax])

    @classmethod
    def from_modes(cls, modes: dict, kmax: int | None = None, mean_zero: bool = False):
        kmax = max((abs(k) for k in modes), default=0) if kmax is None else kmax
        v = np.zeros(2 * kmax + 1, dtype=complex)
        for k, c in modes.items():
            v[k + kmax] += c
        return cls(v, mean_zero)

    @classmethod
    def from_trig(cls, cos=None, sin=None, const: float = 0.0, kmax: int | None = None):
        """Real function ``const + sum a_k cos(kx) + b_k sin(kx)``; dicts or arrays indexed from k=1."""
        cos = _as_mode_dict(cos)
        sin = _as_mode_dict(sin)
        kmax = max([0, *cos, *sin]) if kmax is None else kmax
        v = np.zeros(2 * kmax + 1, dtype=complex)
        v[kmax] = const
        for k, a in cos.items():
            v[kmax + k] += a / 2
            v[kmax - k] += a / 2
        for k, b in sin.items():
            v[kmax + k] += -0.5j * b
            v[kmax - k] += 0.5j * b
        return cls(v, mean_zero=(const == 0))

    @classmethod
    def from_samples(cls, samples, kmax: int, mean_zero: bool = False):
        """Coefficients of the trigonometric interpolant of equispaced samples on [0, 2 pi)."""
        samples = np.asarray(samples)
        M = samples.size
        if M <= 2 * kmax:
            raise ConfigurationError(f"{M} samples cannot resolve modes up to {kmax}")
        spec = fft.fft(samples) / M
        v = np.concatenate([spec[M - kmax:], spec[:kmax + 1]]) if kmax else spec[:1]
        if mean_zero:
            v = v.copy()
            v[kmax] = 0.0
        return cls(v, mean_zero)

    def trig(self) -> tuple:
        """Real cosine and sine coefficients ``(a_1..a_K, b_1..b_K)`` (real part only)."""
        K = self.kmax
        pos, neg = self.values[K + 1:], self.values[:K][::-1]
        return (pos + neg).real, (1j * (pos - neg)).real

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.values, np.conj(self.values[::-1]), atol=tol, rtol=0))

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.exp(1j * np.multiply.outer(x, self.modes)) @ self.values
        return out.real if self.is_real() else out

    def sample(self, M: int) -> np.ndarray:
        """Values on ``2 pi m / M``, ``m = 0..M-1`` via one FFT."""
        if M <= 2 * self.kmax:
            raise ConfigurationError(f"{M} points alias modes up to {self.kmax}")
        buf = np.zeros(M, dtype=complex)
        buf[self.modes % M] = self.values
        out = fft.ifft(buf) * M
        return out.real if self.is_real() else out

    def scale(self, factor: float) -> "FourierCoefficients":
        return FourierCoefficients(self.values * factor, self.mean_zero)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["k", "re", "im"])
        for k, c in zip(self.modes, self.values):
            w.writerow([int(k), repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, mean_zero: bool | None = None) -> "FourierCoefficients":
        rows = list(csv.DictReader(io.StringIO(text)))
        try:
            modes = {int(r["k"]): complex(float(r["re"]), float(r["im"])) for r in rows}
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad Fourier CSV: {exc}") from None
        c = cls.from_modes(modes)
        if mean_zero is None:
            mean_zero = c[0] == 0
        return cls(c.values, mean_zero)


def _as_mode_dict(v) -> dict:
    if v is None:
        return {}
    if isinstance(v, dict):
        return {int(k): float(c) for k, c in v.items()}
    return {k + 1: float(c) for k, c in enumerate(np.asarray(v, dtype=float))}


@dataclass(frozen=True, eq=False)
class SineSeries:
    """``sum_{k=1}^K b_k sin(k pi x)`` on [0, 1]."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float).ravel())

    @property
    def kmax(self) -> int:
        return self.coeffs.size

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.kmax + 1)

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.sin(np.pi * np.multiply.outer(x, self.modes)) @ self.coeffs

    def on_grid(self, level: int) -> np.ndarray:
        """Values on ``m 2^-level``, ``m = 0..2^level``, through a type-I DST."""
        N = 1 << level
        if self.kmax >= N:
            raise ConfigurationError(f"level {level} grid aliases modes up to {self.kmax}")
        b = np.zeros(N - 1)
        b[:self.kmax] = self.coeffs
        inner = fft.dst(b, type=1) / 2 if N > 1 else np.zeros(0)
        return np.concatenate([[0.0], inner, [0.0]])

    def second_derivative(self) -> "SineSeries":
        return SineSeries(-(np.pi * self.modes) ** 2 * self.coeffs)

    def odd_periodic(self) -> FourierCoefficients:
        """The odd 2-periodic extension written in ``y = pi x`` as a Fourier series."""
        return FourierCoefficients.from_trig(sin=self.coeffs)


@dataclass(frozen=True)
class SolutionOperator:
    """Fourier-diagonal solution operator; ``multipliers(k)`` gives the symbol."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("poisson-1d", "single-layer-circle"):
            raise ConfigurationError(f"unknown operator kind {self.kind!r}")

    @property
    def gain(self) -> float:
        """Derivatives added by the operator."""
        return 2.0 if self.kind == "poisson-1d" else -1.0

    def multipliers(self, k) -> np.ndarray:
        k = np.abs(np.asarray(k, dtype=float))
        with np.errstate(divide="ignore"):
            if self.kind == "poisson-1d":
                return np.where(k > 0, 1.0 / (np.pi * k) ** 2, np.inf)
            return np.where(k > 0, 2.0 * k, 0.0)

    def norms(self, kmax: int) -> tuple:
        """``(||S||, ||S^-1||)`` on the modes ``1..kmax``."""
        m = self.multipliers(np.arange(1, kmax + 1))
        return float(m.max()), float(1.0 / m.min())

    def __call__(self, f):
        if self.kind == "poisson-1d":
            return poisson_solve_1d(f)
        return single_layer_solve(f)


# -- Poisson ---------------------------------------------------------------------


def poisson_solve_1d(f: SineSeries) -> SineSeries:
    """Solve ``-u'' = f`` on (0, 1) with ``u(0) = u(1) = 0``."""
    k = np.arange(1, f.kmax + 1)
    return SineSeries(f.coeffs / (np.pi * k) ** 2)


def poisson_residual(u: SineSeries, f: SineSeries, level: int = 10) -> float:
    """Max-norm of ``-u'' - f`` with the fourth-order central stencil on a level grid.

    Sine series are odd about both ends, so the stencil is evaluated with
    exact ghost values.
    """
    h = 2.0 ** -level
    x = np.arange(-2, (1 << level) + 3) * h
    v = u.evaluate(x)
    d2 = (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / (12 * h * h)
    return float(np.abs(-d2 - f.evaluate(x[2:-2])).max())


# -- single layer on the unit circle ----------------------------------------------


def _require_mean_zero(f: FourierCoefficients):
    if abs(f[0]) > _MEAN_TOL * max(1.0, np.abs(f.values).max()):
        raise DomainError("the single layer operator acts on mean-zero densities: <f, 1> must vanish")


def single_layer_apply(f: FourierCoefficients) -> FourierCoefficients:
    """``(A f)_k = f_k / (2|k|)`` for the kernel ``-(1/2 pi) log|x - y|`` on the unit circle."""
    _require_mean_zero(f)
    k = np.abs(f.modes).astype(float)
    out = np.zeros_like(f.values)
    nz = k > 0
    out[nz] = f.values[nz] / (2 * k[nz])
    return FourierCoefficients(out, mean_zero=True)


def single_layer_solve(phi: FourierCoefficients) -> FourierCoefficients:
    """Inverse of :func:`single_layer_apply` on mean-zero data: ``f_k = 2|k| phi_k``."""
    _require_mean_zero(phi)
    k = np.abs(phi.modes).astype(float)
    out = 2 * k * phi.values
    out[phi.kmax] = 0.0
    return FourierCoefficients(out, mean_zero=True)


def single_layer_quadrature(density, theta: float) -> float:
    """``-(1/2 pi) int log|x(theta) - x(t)| density(t) dt`` by adaptive quadrature.

    On the unit circle ``|x(theta) - x(t)| = 2 |sin((theta - t)/2)|``; the
    logarithmic singularities sit at both ends of ``(theta, theta + 2 pi)``.
    """

    def integrand(t):
        return math.log(2.0 * abs(math.sin((theta - t) / 2))) * density(t)

    val, _ = integrate.quad(integrand, theta, theta + 2 * math.pi, limit=400, epsabs=1e-13, epsrel=1e-12)
    return -val / (2 * math.pi)


def single_layer_multiplier(k: int) -> float:
    """Measured symbol at mode ``k``: the operator applied to ``cos(k t)``, read at t = 0."""
    if k == 0:
        raise DomainError("mode 0 is outside the mean-zero space")
    return single_layer_quadrature(lambda t: math.cos(k * t), 0.0)


# -- periodic Besov norms ---------------------------------------------------------


def lp_cutoff(xi) -> np.ndarray:
    """C-infinity bump: 1 on ``|xi| <= 1``, 0 on ``|xi| >= 2``."""
    return smooth_step(np.abs(np.asarray(xi, dtype=float)) - 1.0)


def lp_block(j: int, k) -> np.ndarray:
    """Partition weights ``phi_j(k)``; they sum to 1 over ``j >= 0``."""
    k = np.asarray(k, dtype=float)
    if j == 0:
        return lp_cutoff(k)
    return lp_cutoff(k / 2.0**j) - lp_cutoff(k / 2.0 ** (j - 1))


def _lp_mean(g: np.ndarray, p: float) -> float:
    a = np.abs(g)
    if math.isinf(p):
        return float(a.max())
    top = a.max()
    if top == 0:
        return 0.0
    return float(top * np.mean((a / top) ** p) ** (1.0 / p))


def periodic_besov_norm(c: FourierCoefficients, params: BesovParams, oversample: int = 64) -> float:
    """``(sum_j 2^{sjq} ||sum_k phi_j(k) c_k e^{ikx}||_{L_p}^q)^{1/q}`` on the circle.

    Each block is sampled on an FFT grid ``oversample`` times finer than its
    top frequency; ``L_p`` uses the normalized measure ``dx / 2 pi``.
    """
    if params.d != 1:
        raise ParameterError("periodic Besov norms are implemented for d = 1")
    if oversample < 2:
        raise ParameterError("oversample must be at least 2 to avoid aliasing")
    K = c.kmax
    modes = c.modes
    top = 0 if K == 0 else int(math.ceil(math.log2(K))) + 1
    terms = []
    for j in range(top + 1):
        wts = lp_block(j, modes)
        if not np.any(wts):
            continue
        M = 1 << max(6, int(math.ceil(math.log2(oversample * 2.0 ** (j + 1)))))
        keep = (wts != 0) & (c.values != 0)
        if not keep.any():
            terms.append(0.0)
            continue
        buf = np.zeros(M, dtype=complex)
        np.add.at(buf, modes[keep] % M, wts[keep] * c.values[keep])
        g = fft.ifft(buf) * M
        terms.append(2.0 ** (params.s * j) * _lp_mean(g, params.p))
    terms = np.asarray(terms)
    if terms.size == 0 or not terms.any():
        return 0.0
    if math.isinf(params.q):
        return float(terms.max())
    big = terms.max()
    return float(big * np.sum((terms / big) ** params.q) ** (1.0 / params.q))
