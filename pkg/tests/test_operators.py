import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse
from scipy.sparse.linalg import spsolve

from framewidths.besov import BesovParams
from framewidths.errors import ConfigurationError, DomainError, ParameterError
from framewidths.operators import (
    FourierCoefficients,
    SineSeries,
    SolutionOperator,
    lp_block,
    periodic_besov_norm,
    poisson_residual,
    poisson_solve_1d,
    single_layer_apply,
    single_layer_multiplier,
    single_layer_quadrature,
    single_layer_solve,
)


def bump(xi):
    """1 on |xi| <= 1, 0 on |xi| >= 2, built from exp(-1/u) as in the usual construction."""
    t = np.abs(np.asarray(xi, dtype=float)) - 1.0
    g = lambda u: np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    return g(1 - t) / (g(1 - t) + g(t))


def direct_besov(c: FourierCoefficients, s, p, q, npts=1 << 16):
    """Block norms by direct summation in x (no FFT), normalized measure."""
    x = np.linspace(0, 2 * np.pi, npts, endpoint=False)
    k = c.modes
    E = np.exp(1j * np.outer(x, k))
    terms = []
    j = 0
    while 2.0 ** (j - 1) <= max(c.kmax, 1):
        w = bump(k) if j == 0 else bump(k / 2.0**j) - bump(k / 2.0 ** (j - 1))
        g = E @ (w * c.values)
        lp = np.abs(g).max() if math.isinf(p) else np.mean(np.abs(g) ** p) ** (1 / p)
        terms.append(2.0 ** (s * j) * lp)
        j += 1
    terms = np.array(terms)
    return terms.max() if math.isinf(q) else np.sum(terms**q) ** (1 / q)


# -- Poisson -----------------------------------------------------------------------


def test_poisson_single_mode():
    u = poisson_solve_1d(SineSeries([1.0]))
    x = np.linspace(0, 1, 33)
    assert np.allclose(u.evaluate(x), np.sin(np.pi * x) / np.pi**2, atol=1e-15)


def test_poisson_zero():
    assert not np.any(poisson_solve_1d(SineSeries(np.zeros(5))).coeffs)


def test_poisson_residual_random(rng):
    for _ in range(5):
        f = SineSeries(rng.standard_normal(32))
        assert poisson_residual(poisson_solve_1d(f), f, 10) < 1e-4


def test_poisson_matches_dense_finite_differences(rng):
    f = SineSeries(rng.standard_normal(8))
    L = 11
    n = (1 << L) - 1
    h = 2.0**-L
    x = np.arange(1, n + 1) * h
    lap = sparse.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h**2
    u_fd = spsolve(lap.tocsc(), f.evaluate(x))
    u = poisson_solve_1d(f)
    # second-order scheme: error ~ h^2 max|u''''| / 12
    assert np.abs(u_fd - u.evaluate(x)).max() < 1e-6
    assert u.evaluate(np.array([0.0, 1.0])) == pytest.approx([0, 0], abs=1e-14)


def test_on_grid_matches_evaluate(rng):
    s = SineSeries(rng.standard_normal(20))
    x = np.linspace(0, 1, 2**6 + 1)
    assert np.abs(s.on_grid(6) - s.evaluate(x)).max() < 1e-12
    with pytest.raises(ConfigurationError):
        s.on_grid(4)


def test_second_derivative_is_negative_laplacian(rng):
    f = SineSeries(rng.standard_normal(6))
    assert np.allclose(poisson_solve_1d(f).second_derivative().coeffs, -f.coeffs)


# -- single layer ------------------------------------------------------------------


@pytest.mark.parametrize("k", [1, 3])
def test_single_layer_against_quadrature(k):
    f = FourierCoefficients.from_trig(cos={k: 1.0})
    Af = single_layer_apply(f)
    for theta in (0.0, 0.4, 1.9, 4.0):
        quad = single_layer_quadrature(lambda t: math.cos(k * t), theta)
        assert abs(quad - math.cos(k * theta) / (2 * k)) < 1e-6
        assert abs(Af.evaluate(theta) - quad) < 1e-6


@pytest.mark.parametrize("k", range(1, 9))
def test_multiplier_by_quadrature(k):
    assert abs(single_layer_multiplier(k) - 1 / (2 * k)) < 1e-6


def test_sine_modes_by_quadrature():
    f = FourierCoefficients.from_trig(sin={2: 1.0})
    quad = single_layer_quadrature(lambda t: math.sin(2 * t), 0.7)
    assert abs(single_layer_apply(f).evaluate(0.7) - quad) < 1e-6


def test_single_layer_rejects_nonzero_mean():
    with pytest.raises(DomainError, match="mean-zero"):
        single_layer_apply(FourierCoefficients.from_trig(cos={1: 1.0}, const=0.5))
    with pytest.raises(DomainError):
        single_layer_solve(FourierCoefficients(np.array([0, 1.0, 0])))
    with pytest.raises(DomainError):
        FourierCoefficients(np.array([0, 1.0, 0]), mean_zero=True)


def test_single_layer_solve_examples(rng):
    phi = FourierCoefficients.from_trig(cos={1: 0.5})
    f = single_layer_solve(phi)
    assert np.allclose(f.trig()[0], [1.0]) and np.allclose(f.trig()[1], [0.0])
    zero = single_layer_solve(FourierCoefficients(np.zeros(9, dtype=complex)))
    assert not np.any(zero.values)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_apply_solve_roundtrip(seed, K):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2 * K + 1) + 1j * rng.standard_normal(2 * K + 1)
    v[K] = 0
    phi = FourierCoefficients(v, mean_zero=True)
    back = single_layer_apply(single_layer_solve(phi))
    assert np.abs(back.values - phi.values).max() <= 1e-12 * max(1, np.abs(v).max())
    assert back[0] == 0 and single_layer_solve(phi)[0] == 0


def test_operator_norms_match_sections():
    for kind in ("poisson-1d", "single-layer-circle"):
        op = SolutionOperator(kind)
        K = 12
        m = op.multipliers(np.arange(1, K + 1))
        nS, nSi = op.norms(K)
        # a diagonal operator's section has singular values equal to |multipliers|
        sv = np.linalg.svd(np.diag(m), compute_uv=False)
        assert abs(sv.max() - nS) <= 1e-12 * nS
        assert abs(1 / sv.min() - nSi) <= 1e-12 * nSi
    assert SolutionOperator("poisson-1d").gain == 2
    assert SolutionOperator("single-layer-circle").gain == -1
    with pytest.raises(ConfigurationError):
        SolutionOperator("heat")


def test_solution_operator_dispatch(rng):
    f = SineSeries(rng.standard_normal(4))
    assert np.array_equal(SolutionOperator("poisson-1d")(f).coeffs, poisson_solve_1d(f).coeffs)


# -- Fourier coefficients ------------------------------------------------------------


def test_trig_roundtrip(rng):
    a, b = rng.standard_normal(7), rng.standard_normal(7)
    c = FourierCoefficients.from_trig(cos=a, sin=b)
    ra, rb = c.trig()
    assert np.allclose(ra, a) and np.allclose(rb, b)
    x = rng.uniform(0, 2 * np.pi, 20)
    direct = sum(a[k - 1] * np.cos(k * x) + b[k - 1] * np.sin(k * x) for k in range(1, 8))
    assert np.allclose(c.evaluate(x), direct)
    assert np.allclose(c.sample(64), c.evaluate(2 * np.pi * np.arange(64) / 64))
    assert np.allclose(FourierCoefficients.from_samples(c.sample(64), 7).values, c.values)


def test_csv_roundtrip(rng):
    c = FourierCoefficients(rng.standard_normal(11) + 1j * rng.standard_normal(11))
    text = c.to_csv()
    assert text.startswith("k,re,im\r\n-5,")
    back = FourierCoefficients.from_csv(text)
    assert np.array_equal(back.values, c.values)
    with pytest.raises(ConfigurationError):
        FourierCoefficients.from_csv("k,re\r\n1,2\r\n")


# -- periodic Besov norms -----------------------------------------------------------


def test_partition_of_unity():
    k = np.arange(0, 600)
    total = sum(lp_block(j, k) for j in range(12))
    assert np.allclose(total, 1.0, atol=1e-15)


def test_single_mode_norm():
    c = FourierCoefficients.from_modes({4: 1.0})
    # k = 4 sits only in block j = 2 with weight 1; ||e^{i4x}||_{L_2} = 1 in dx/2pi
    assert lp_block(2, 4) == 1.0 and lp_block(1, 4) == 0.0 and lp_block(3, 4) == 0.0
    assert periodic_besov_norm(c, BesovParams(1, 2, 2)) == pytest.approx(4.0, rel=1e-13)


@pytest.mark.parametrize("s,p,q", [(0.7, 1.5, 2.0), (1.5, 1.0, 1.0), (0.0, 2 / 3, 0.5), (0.5, math.inf, math.inf)])
def test_norm_matches_direct_summation(s, p, q, rng):
    K = 21
    c = FourierCoefficients(rng.standard_normal(2 * K + 1) + 1j * rng.standard_normal(2 * K + 1))
    # the L_p mean of a block is a quadrature of |g|^p; sup norms converge more slowly
    tol = 1e-3 if math.isinf(p) else 1e-5
    assert periodic_besov_norm(c, BesovParams(s, p, q)) == pytest.approx(direct_besov(c, s, p, q), rel=tol)


def test_plancherel_window(rng):
    for K in (3, 17, 60):
        c = FourierCoefficients(rng.standard_normal(2 * K + 1) + 1j * rng.standard_normal(2 * K + 1))
        ratio = periodic_besov_norm(c, BesovParams(0, 2, 2)) / c.l2_norm()
        assert 2**-0.5 <= ratio <= 2**0.5


def test_homogeneity(rng):
    c = FourierCoefficients(rng.standard_normal(31) + 0j)
    par = BesovParams(0.3, 1.2, 3)
    assert periodic_besov_norm(c.scale(-3.5), par) == pytest.approx(3.5 * periodic_besov_norm(c, par), rel=1e-12)


def test_norm_parameter_errors():
    c = FourierCoefficients.from_modes({1: 1.0})
    with pytest.raises(ParameterError):
        periodic_besov_norm(c, BesovParams(1, 2, 2, d=2))
    with pytest.raises(ParameterError):
        periodic_besov_norm(c, BesovParams(1, 2, 2), oversample=1)
    with pytest.raises(ParameterError):
        BesovParams(1, 0, 2)
