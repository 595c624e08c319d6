"""Worst-case n-term rate experiments.

The supremum over a unit ball is estimated by the maximum over a fixed set
of extremal elements and ``n_random`` seeded random elements.  Every element
is normalized to unit source norm before the error is measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .besov import (
    BesovParams,
    RateReport,
    Weight,
    extremal_ball_element,
    fit_rate,
    greedy_errors,
    random_ball_element,
    tail_errors,
)
from .domains import ExtensionOperator, build_domain_frame_pair, domain_analysis, domain_preset
from .errors import ConfigurationError, RegularityError
from .operators import FourierCoefficients, SineSeries, SolutionOperator, periodic_besov_norm
from .wavelets import DyadicGrid, build_system, periodic_analyze

__all__ = ["KINDS", "rate_experiment", "default_levels"]

KINDS = ("sequence", "domain-poisson", "single-layer")
_TARGETS = {"domain-poisson": 1.0, "single-layer": -0.5}


def default_levels(kind: str, n_max: int, d: int = 1) -> int:
    """Finest level: a few octaves above ``n_max`` so the extremal blocks are all present.

    Level ``j`` holds about ``2**(j*d)`` coefficients, so the octave count is
    divided by ``d``.
    """
    extra = 3 if kind == "sequence" else 2
    return int(math.ceil(math.log2(max(n_max, 2)) / d)) + extra


def rate_experiment(kind: str, source: BesovParams, target_s: float | None = None, n_list=None,
                    seed: int = 0, n_random: int = 64, levels: int | None = None,
                    fit_range=None, family=(2, 4), dictionary: str = "wavelet") -> RateReport:
    """Fit the decay of the worst-case ``n``-term error after the solution operator.

    ``sequence``: identity on ``b^{source.s}_{p,q} -> b^{target_s}_{2,2}``.
    ``domain-poisson``: ``-u'' = f`` on (0, 1), ``f`` in a periodic Besov ball
    (odd extension), ``u`` expanded in the domain frame and measured in ``H^1``.
    ``single-layer``: mean-zero data in the circle Besov ball, the density
    ``S phi`` approximated in ``H^{-1/2}`` by trigonometric terms
    (``dictionary="trig"``) or by periodized wavelets of ``family``
    (``dictionary="wavelet"``).  Trigonometric terms lose ``1/p - 1/2`` in
    the rate when ``p < 2``.
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown experiment kind {kind!r}; choose from {', '.join(KINDS)}")
    if dictionary not in ("trig", "wavelet"):
        raise ConfigurationError(f"unknown dictionary {dictionary!r}; use trig or wavelet")
    if target_s is None:
        target_s = _TARGETS.get(kind, 0.0)
    gain = 0.0 if kind == "sequence" else SolutionOperator(
        "poisson-1d" if kind == "domain-poisson" else "single-layer-circle").gain
    t = source.t_condition(target_s, gain)
    if kind != "sequence" and source.d != 1:
        raise ConfigurationError(f"{kind} experiments are one-dimensional")
    ns = sorted({int(n) for n in (n_list if n_list is not None else (16, 32, 64, 128, 256, 512, 1024))})
    if not ns or ns[0] < 0:
        raise ConfigurationError("n_list must hold nonnegative integers")
    if levels is None:
        levels = default_levels(kind, ns[-1], source.d)
    if fit_range is None:
        fit_range = (ns[0], ns[-1])
    rng = np.random.default_rng(seed)
    if kind == "sequence":
        profiles, errs = _sequence_errors(source, target_s, ns, levels, rng, n_random)
    else:
        profiles, errs = _spectral_errors(kind, source, ns, levels, rng, n_random, family, dictionary)
    worst = errs.max(axis=0)
    arg = errs.argmax(axis=0)
    meta = {
        "kind": kind,
        "source": source.to_dict(),
        "target_s": target_s,
        "t": t,
        "levels": levels,
        "seed": seed,
        "n_random": n_random,
        "elements": len(profiles),
        "worst_profiles": [profiles[i] for i in arg],
    }
    if kind == "single-layer":
        meta["dictionary"] = dictionary
    if kind == "domain-poisson" or (kind == "single-layer" and dictionary == "wavelet"):
        system = build_system(tuple(family), 1)
        meta["family"] = list(family)
        # the primal spline reproduces polynomials of degree < vm_dual + 1
        cap = system.vanishing_moments[1] + 1 - target_s
        meta["rate_cap"] = cap
        meta["saturated"] = bool(t > cap)
    return fit_rate(list(zip(ns, worst.tolist())), fit_range, -t / source.d, meta)


def _sequence_errors(source, target_s, ns, levels, rng, n_random):
    w = Weight.sobolev(target_s)
    elems = [("equal-block", extremal_ball_element(source, levels, "equal-block")),
             ("lacunary", extremal_ball_element(source, levels, "lacunary"))]
    elems += [(f"level-{j}", extremal_ball_element(source, j, "single-level")) for j in range(levels + 1)]
    elems += [(f"random-{i}", random_ball_element(source, levels, rng)) for i in range(n_random)]
    return [p for p, _ in elems], np.array([greedy_errors(a, ns, w) for _, a in elems])


# -- spectral kinds ------------------------------------------------------------------


@dataclass
class _SpectralLayout:
    """Real coefficient vector over modes ``1..K`` (cosines then sines for the circle)."""

    kind: str
    levels: int

    @property
    def kmax(self) -> int:
        return (1 << self.levels) - 1

    @property
    def freqs(self) -> np.ndarray:
        k = np.arange(1, self.kmax + 1)
        return np.concatenate([k, k]) if self.kind == "single-layer" else k

    @property
    def block(self) -> np.ndarray:
        # block j holds 2^{j-1} <= k < 2^j
        return np.floor(np.log2(self.freqs)).astype(int) + 1

    def coefficients(self, v) -> FourierCoefficients:
        K = self.kmax
        if self.kind == "single-layer":
            return FourierCoefficients.from_trig(cos=v[:K], sin=v[K:])
        return SineSeries(v).odd_periodic()


def _spectral_elements(layout: _SpectralLayout, source: BesovParams, rng, n_random):
    blk, k = layout.block, layout.freqs
    s, p = source.s, source.p
    sizes = np.bincount(blk, minlength=layout.levels + 1)
    dirichlet = 1.0 - (0.0 if math.isinf(p) else 1.0 / p)
    out = []
    for j in range(1, layout.levels + 1):
        out.append((f"level-{j}", (blk == j).astype(float)))
    out.append(("equal-block", 2.0 ** (-s * blk) * sizes[blk] ** -dirichlet))
    lac = np.where((k == 2 ** (blk - 1)) & (np.arange(k.size) < layout.kmax), 2.0 ** (-s * blk), 0.0)
    out.append(("lacunary", lac))
    for i in range(n_random):
        level_scale = np.exp(rng.standard_normal(layout.levels + 1))
        v = rng.standard_normal(k.size) * 2.0 ** (-s * blk) * sizes[blk] ** -0.5 * level_scale[blk]
        out.append((f"random-{i}", v))
    return out


def _spectral_errors(kind, source, ns, levels, rng, n_random, family, dictionary="trig"):
    layout = _SpectralLayout(kind, levels)
    k = layout.freqs.astype(float)
    elems = _spectral_elements(layout, source, rng, n_random)
    wavelet = kind == "single-layer" and dictionary == "wavelet"
    if wavelet:
        system = build_system(tuple(family), 1)
        if not system.r > 0.5:
            raise RegularityError(f"wavelet regularity r = {system.r:.4g} must exceed 1/2 for H^-1/2")
        sample_level = levels + 2
        w = Weight.sobolev(-0.5)
    if kind == "domain-poisson":
        dfp = build_domain_frame_pair(build_system(tuple(family), 1), domain_preset("interval"),
                                      ExtensionOperator(target_s=1.0), s=1.0, j_max=levels,
                                      level=levels + 1)
        w = Weight.sobolev(1.0)
    rows = []
    for _, v in elems:
        v = v / periodic_besov_norm(layout.coefficients(v), source)
        if wavelet:
            dens = layout.coefficients(2 * k * v).sample(1 << sample_level)
            rows.append(greedy_errors(periodic_analyze(system, dens), ns, w))
        elif kind == "single-layer":
            dens = 2 * k * v
            # ||g||^2_{H^{-1/2}} = sum_k (a_k^2 + b_k^2) / (2k)
            rows.append(tail_errors(dens**2 / (2 * k), ns))
        else:
            u = SineSeries(v / (np.pi * k) ** 2)
            grid = DyadicGrid.zeros(dfp.level, dfp.domain.bbox).with_values(u.on_grid(dfp.level))
            rows.append(greedy_errors(domain_analysis(dfp, grid), ns, w))
    return [p for p, _ in elems], np.array(rows)
