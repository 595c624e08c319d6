"""Invariant suite: every check is measured, compared with its tolerance and reported."""

from __future__ import annotations

import json
import math
import traceback
from dataclasses import asdict, dataclass, field

import numpy as np

from .besov import (
    BesovParams,
    Weight,
    besov_seq_norm,
    exhaustive_n_term_oracle,
    greedy_n_term,
    random_ball_element,
)
from .domains import build_domain_frame_pair, domain_analysis, domain_preset, domain_synthesis
from .experiments import rate_experiment
from .frames import (
    FramePair,
    check_stability,
    continuous_n_term,
    map_frame_pair,
    n_term_error,
    random_subsets,
    riesz_basis_frame,
    tight_duplicate,
)
from .operators import (
    FourierCoefficients,
    SineSeries,
    SolutionOperator,
    periodic_besov_norm,
    poisson_residual,
    poisson_solve_1d,
    single_layer_apply,
    single_layer_multiplier,
    single_layer_solve,
)
from .wavelets import (
    CoefficientArray,
    DyadicGrid,
    analyze,
    build_system,
    inner_product,
    perfect_reconstruction_residual,
    synthesize,
    vanishing_moments_check,
)

__all__ = ["Check", "VerifyReport", "run_verify", "CHECKS"]

FAMILIES = ((1, 1), (2, 2), (2, 4))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def table(self) -> str:
        width = max((len(c.name) for c in self.checks), default=4)
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.value:.3e}  (tol {c.tolerance:.1e})"
                 + (f"  {c.detail}" if c.detail else "") for c in self.checks]
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({"passed": self.passed, "checks": [asdict(c) for c in self.checks]}, indent=2)


def _below(name, value, tol, detail=""):
    return Check(name, bool(value <= tol), float(value), tol, detail)


# -- wavelet core ----------------------------------------------------------------


def _biorthogonality(fam):
    sy = build_system(fam, 1)
    keys = [(-1, (0, k)) for k in range(-2, 3)]
    keys += [(j, (1, k)) for j in range(3) for k in range(-2, 2**j + 2)]
    worst = max(abs(inner_product(sy, a, b) - (a == b)) for a in keys for b in keys)
    return [_below(f"biorthogonality {fam}", worst, 1e-8, f"{len(keys)}^2 pairs")]


def _perfect_reconstruction(fam, rng):
    out = [_below(f"filter-bank identities {fam}", perfect_reconstruction_residual(build_system(fam, 1)), 1e-10)]
    for d, shape in ((1, (257,)), (2, (33, 33))):
        sy = build_system(fam, d)
        g = DyadicGrid(5 if d == 2 else 8, ((0, 1),) * d, rng.standard_normal(shape))
        back = synthesize(sy, analyze(sy, g), g)
        out.append(_below(f"analyze/synthesize round trip {fam} d={d}",
                          float(np.abs(back.values - g.values).max()), 1e-10))
    return out


def _moments(fam):
    out = []
    for d in (1, 2):
        sy = build_system(fam, d)
        for side, order in zip(("primal", "dual"), sy.vanishing_moments):
            res = vanishing_moments_check(sy, order, side, level=10 if d == 1 else 8)
            out.append(_below(f"vanishing moments {fam} d={d} {side} |alpha|<={order}", max(res.values()), 1e-10))
    return out


# -- sequence spaces -------------------------------------------------------------


def _quasi_norm(rng):
    out = []
    worst_scale = worst_q = worst_dom = worst_tri = 0.0
    for p, q in ((1.0, 2.0), (2 / 3, 1.0), (2.0, 2.0), (0.5, math.inf), (math.inf, 0.75)):
        par = BesovParams(1.0, p, q)
        a = random_ball_element(par, 5, rng)
        b = random_ball_element(par, 5, rng)
        na = besov_seq_norm(a, par)
        lam = float(rng.uniform(-3, 3))
        worst_scale = max(worst_scale, abs(besov_seq_norm(a * lam, par) - abs(lam) * na) / (abs(lam) * na))
        bigger = a.map_values(lambda v: v * (1 + rng.uniform(0, 1, v.shape)))
        worst_dom = max(worst_dom, na - besov_seq_norm(bigger, par))
        if not math.isinf(q):
            worst_q = max(worst_q, besov_seq_norm(a, BesovParams(1.0, p, 2 * q)) - na)
        # l_q(l_p) quasi-triangle constant: product of the two layer constants
        const = 2.0 ** (max(1 / p - 1, 0.0) + max(1 / q - 1, 0.0))
        worst_tri = max(worst_tri, besov_seq_norm(a + b, par) - const * (na + besov_seq_norm(b, par)))
    out.append(_below("quasi-norm homogeneity", worst_scale, 1e-12))
    out.append(_below("quasi-norm monotone under domination", max(worst_dom, 0.0), 1e-12))
    out.append(_below("quasi-norm nonincreasing in q", max(worst_q, 0.0), 1e-12))
    out.append(_below("quasi-triangle inequality", max(worst_tri, 0.0), 1e-12))
    return out


def _greedy_oracle(rng, count=60):
    worst = 0.0
    w = Weight.sobolev(0.5)
    for _ in range(count):
        m = int(rng.integers(1, 11))
        keys = rng.choice(64, size=m, replace=False)
        a = CoefficientArray({(int(k) // 8, (1, int(k) % 8)): float(rng.standard_normal()) for k in keys}, 1)
        n = int(rng.integers(0, m + 1))
        worst = max(worst, abs(greedy_n_term(a, n, w)[1] - exhaustive_n_term_oracle(a, n, w)[1]))
    return [_below("greedy equals exhaustive n-term", worst, 1e-12, f"{count} instances")]


# -- frames ----------------------------------------------------------------------


def _isomorphism_envelope(rng):
    frame = riesz_basis_frame(12, rng)
    Q, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    S = Q @ np.diag(rng.uniform(0.5, 2.0, 12)) @ Q.T
    mapped = map_frame_pair(frame, S)
    measured = FramePair.from_matrices(mapped.analysis, mapped.atoms, mapped.weight)
    probes = [S @ rng.standard_normal(12) for _ in range(10)]
    stab = check_stability(mapped, random_subsets(mapped, 40, rng), probes)
    gap = max(mapped.A - measured.A, measured.B - mapped.B, mapped.A_prime - stab, 0.0)
    return [_below("isomorphism envelope (A/|S^-1|, B|S|, A'/|S^-1|)", gap, 1e-6)]


def _tight_duplicate():
    fr = tight_duplicate(4)
    return [_below("tight duplicate A = B = 1", max(abs(fr.A - 1), abs(fr.B - 1)), 1e-8)]


def _thresholding(rng, trials=20):
    worst_m, worst_ratio = 0.0, 0.0
    for _ in range(trials):
        fr = riesz_basis_frame(32, rng)
        f = rng.standard_normal(32) * np.exp(-0.3 * np.arange(32))
        n = int(rng.integers(1, 12))
        e, _ = n_term_error(fr, f, n)
        if e == 0:
            continue
        res = continuous_n_term(fr, f, n, e)
        worst_m = max(worst_m, res.kept_count / (2 * n))
        worst_ratio = max(worst_ratio, res.error / res.bound)
    return [_below("thresholding keeps m <= 2n", worst_m, 1.0),
            _below("thresholding error / bound", worst_ratio, 1.0 + 1e-6)]


# -- operators -------------------------------------------------------------------


def _operators(rng):
    out = []
    f = SineSeries(rng.standard_normal(32))
    out.append(_below("Poisson residual on level-10 grid", poisson_residual(poisson_solve_1d(f), f, 10), 1e-4))
    phi = FourierCoefficients.from_trig(cos=rng.standard_normal(20), sin=rng.standard_normal(20))
    back = single_layer_apply(single_layer_solve(phi))
    out.append(_below("single layer apply(solve) = id", float(np.abs(back.values - phi.values).max()), 1e-12))
    out.append(_below("mean zero preserved", abs(back[0]) + abs(single_layer_solve(phi)[0]), 0.0))
    quad = max(abs(single_layer_multiplier(k) - 1 / (2 * k)) for k in range(1, 9))
    out.append(_below("single layer symbol 1/(2|k|) by quadrature", quad, 1e-6))
    for kind in ("poisson-1d", "single-layer-circle"):
        op = SolutionOperator(kind)
        K = 16
        cols = []
        for k in range(1, K + 1):
            e = np.zeros(K)
            e[k - 1] = 1.0
            if kind == "poisson-1d":
                cols.append(op(SineSeries(e)).coeffs)
            else:
                cols.append(op(FourierCoefficients.from_trig(cos=e)).trig()[0])
        sv = np.linalg.svd(np.array(cols).T, compute_uv=False)
        nS, nSi = op.norms(K)
        gap = max(abs(sv.max() - nS) / nS, abs(1 / sv.min() - nSi) / nSi)
        out.append(_below(f"{kind} norms match extreme multipliers", gap, 1e-12))
    c = FourierCoefficients(rng.standard_normal(41) + 1j * rng.standard_normal(41))
    par = BesovParams(0.7, 1.5, 2.0)
    hom = abs(periodic_besov_norm(c.scale(2.5), par) - 2.5 * periodic_besov_norm(c, par))
    out.append(_below("periodic Besov norm homogeneity", hom / periodic_besov_norm(c, par), 1e-12))
    return out


# -- domain frames and rates -----------------------------------------------------


def _domain_reconstruction(rng):
    dfp = build_domain_frame_pair(build_system((2, 2), 1), domain_preset("interval"), j_max=5)
    worst = 0.0
    for _ in range(10):
        coef = rng.standard_normal(6)
        f = dfp.sample(lambda x: np.polynomial.polynomial.polyval(x, coef) + np.sin(7 * x * coef[0]))
        back = domain_synthesis(dfp, domain_analysis(dfp, f))
        worst = max(worst, float(np.abs(back.values - f.values).max()))
    return [_below("domain frame reconstruction on (0,1)", worst, 1e-6)]


def _rate_monotone():
    rep = rate_experiment("sequence", BesovParams(1.0, 1.0, 2.0), 0.0, [4, 8, 16, 32, 64], n_random=8)
    bad = sum(1 for (_, a), (_, b) in zip(rep.samples, rep.samples[1:]) if b > a * (1 + 1e-12))
    return [_below("worst-case rates nonincreasing in n", bad, 0)]


def _all_checks(rng):
    out = []
    for fam in FAMILIES:
        out += [lambda fam=fam: _biorthogonality(fam),
                lambda fam=fam: _perfect_reconstruction(fam, rng),
                lambda fam=fam: _moments(fam)]
    out += [lambda: _quasi_norm(rng), lambda: _greedy_oracle(rng), lambda: _isomorphism_envelope(rng),
            _tight_duplicate, lambda: _thresholding(rng), lambda: _operators(rng),
            lambda: _domain_reconstruction(rng), _rate_monotone]
    return out


CHECKS = ("biorthogonality", "perfect reconstruction", "vanishing moments", "quasi-norm",
          "greedy oracle", "isomorphism envelope", "tight duplicate", "thresholding",
          "operators", "domain reconstruction", "rate monotonicity")


def run_verify(seed: int = 0) -> VerifyReport:
    """Run every invariant check; exceptions count as failures."""
    rng = np.random.default_rng(seed)
    report = VerifyReport()
    for check in _all_checks(rng):
        try:
            report.checks.extend(check())
        except Exception as exc:  # a crash is a failed check, not an aborted suite
            name = getattr(check, "__name__", "check").strip("_<>")
            detail = traceback.format_exception_only(type(exc), exc)[-1].strip()
            report.checks.append(Check(name, False, math.nan, math.nan, detail))
    return report
