import json
import math

import numpy as np
import pytest

from framewidths.besov import BesovParams, besov_seq_norm, fit_rate
from framewidths.domains import (
    Domain,
    ExtensionOperator,
    build_domain_frame_pair,
    build_index_sets,
    domain_analysis,
    domain_preset,
    domain_synthesis,
    extend,
    hs_norm_estimate,
    load_domain,
    riesz_lower_bound,
    sigma_n_frame,
    stable_box_subframe,
)
from framewidths.errors import CoefficientIndexError, ConfigurationError, GeometryError, RegularityError
from framewidths.frames import check_stability
from framewidths.wavelets import CoefficientArray, DyadicGrid, build_system, evaluate_atom

INTERVAL = domain_preset("interval")
HAAR = build_system((1, 1))
CDF22 = build_system((2, 2))
BOX = ((0.25, 0.75),)


@pytest.fixture(scope="module")
def haar_pair():
    return build_domain_frame_pair(HAAR, INTERVAL, j_max=5, stable_box=BOX)


@pytest.fixture(scope="module")
def cdf_pair():
    return build_domain_frame_pair(CDF22, INTERVAL, j_max=5)


# -- geometry and index sets ---------------------------------------------------------


def test_interval_ball():
    assert INTERVAL.center == (0.5,) and INTERVAL.radius == 0.5


def test_level_zero_index_set():
    fam = build_index_sets(INTERVAL, HAAR, 3)
    # integer solutions of |k - 1/2| <= 2 * 1/2 + 1
    expected = [k for k in range(-10, 10) if abs(k - 0.5) <= 2]
    assert expected == [-1, 0, 1, 2]
    assert [lam[1] for lam in fam.levels[0]] == expected
    assert [lam[1] for lam in fam.levels[-1]] == expected


def test_cardinality_growth():
    fam = build_index_sets(INTERVAL, CDF22, 8)
    C1, C2 = fam.cardinality_constants(2)
    # the rule is a box of side 4R + 2^{1-j} N around x0
    for j in range(2, 9):
        assert len(fam.levels[j]) == math.floor(1.5 * 2**j + 3) - math.ceil(-0.5 * 2**j - 3) + 1
    assert 1 < C1 <= C2 < 5


def test_l_shape_has_three_types():
    sy = build_system((1, 1), 2)
    fam = build_index_sets(domain_preset("l-shape"), sy, 3)
    lam = fam.levels[-1]
    for j in range(0, 4):
        assert len(fam.levels[j]) == 3 * len([k for k in fam.levels[j] if k[0] == 1])
    assert len(fam.levels[0]) == 3 * len(lam)


def test_domain_validation():
    with pytest.raises(ConfigurationError):
        Domain(1, intervals=[(0, 0.5), (0.25, 1)])
    with pytest.raises(ConfigurationError):
        Domain(1, intervals=[(0, 1 / 3)])
    with pytest.raises(ConfigurationError):
        domain_preset("disk")


def test_load_domain(tmp_path):
    path = tmp_path / "dom.json"
    path.write_text(json.dumps({"dimension": 1, "intervals": [["0", "1/4"], ["1/2", "1"]]}))
    dom = load_domain(path)
    assert dom.inside(np.array([0.1, 0.3, 0.75])).tolist() == [True, False, True]


# -- extension ---------------------------------------------------------------------


def test_zero_extends_to_zero():
    g = DyadicGrid.zeros(7, INTERVAL.bbox)
    assert not np.any(extend(ExtensionOperator(), INTERVAL, g).values)


@pytest.mark.parametrize("L", [8, 10])
def test_reflection_smoothness(L):
    g = DyadicGrid.zeros(L, INTERVAL.bbox)
    f = g.with_values(np.sin(np.pi * g.coords()[0]))
    h = 2.0**-L
    for order in (1, 2):
        E = extend(ExtensionOperator(order=order), INTERVAL, f)
        x, v = E.coords()[0], E.values
        assert np.array_equal(v[(x >= 0) & (x <= 1)], f.values)
        for b in (0.0, 1.0):
            i = int(np.flatnonzero(np.isclose(x, b))[0])
            # first differences stay O(h) across the boundary: no jump
            assert abs(v[i + 1] - v[i]) <= 1.01 * np.pi * h and abs(v[i] - v[i - 1]) <= 1.01 * np.pi * h
            d2 = abs(v[i - 1] - 2 * v[i] + v[i + 1])
            if order == 2:
                # two-point reflection matches the slope: second difference is O(h^2)
                assert d2 <= np.pi**2 * h**2
            else:
                # even reflection leaves a kink of size 2 pi h
                assert d2 == pytest.approx(2 * np.sin(np.pi * h), rel=1e-6)


def test_extension_support():
    g = DyadicGrid.zeros(8, INTERVAL.bbox)
    E = extend(ExtensionOperator(), INTERVAL, g.with_values(1.0))
    x = E.coords()[0]
    assert E.box == ((-0.5, 1.5),)
    # cutoff reaches zero a quarter radius outside Omega
    assert not np.any(E.values[(x <= -0.125) | (x >= 1.125)])
    assert np.all(E.values[(x > -0.1) & (x < 1.1)] > 0)


def test_zero_extension_flag():
    g = DyadicGrid.zeros(6, INTERVAL.bbox).with_values(1.0)
    assert "extension_not_smoothness_valid" in extend(ExtensionOperator("zero", target_s=0.5), INTERVAL, g).flags
    assert not extend(ExtensionOperator("zero", target_s=0.25), INTERVAL, g).flags
    bump = g.with_values(np.sin(np.pi * g.coords()[0]))
    assert not extend(ExtensionOperator("zero", target_s=1.0), INTERVAL, bump).flags


def test_extension_2d_is_continuous_on_square():
    sq = domain_preset("square")
    g = DyadicGrid.zeros(6, sq.bbox)
    X, Y = g.mesh()
    f = g.with_values(1 + X + Y**2)
    E = extend(ExtensionOperator(), sq, f)
    assert np.array_equal(np.sort(E.values[sq.closure(*E.mesh())]), np.sort(f.values.ravel()))
    # across the edge x = 0 the extension continues f: steps are O(h), not O(1)
    x, y = (c for c in E.coords())
    i0 = int(np.flatnonzero(x == 0)[0])
    on_edge = (y >= 0) & (y <= 1)
    h = 2.0**-6
    assert np.abs(E.values[i0 - 1, on_edge] - E.values[i0, on_edge]).max() < 5 * h
    with pytest.raises(ConfigurationError):
        extend(ExtensionOperator(order=2), sq, g)


# -- analysis and synthesis ---------------------------------------------------------


def test_atom_in_box_gives_unit_coefficient(cdf_pair):
    key = (3, (1, 3))
    a, b = CDF22.atom_support(*key)[0]
    assert 0.25 <= a and b <= 0.75
    f = cdf_pair.grid().with_values(evaluate_atom(CDF22, "primal", *key, cdf_pair.grid()).values)
    c = domain_analysis(cdf_pair, f)
    assert abs(c[key] - 1) < 1e-8
    assert max((abs(v) for k, v in c.items() if k != key), default=0.0) < 1e-8


def test_haar_constant_kills_interior_wavelets(haar_pair):
    c = domain_analysis(haar_pair, haar_pair.sample(lambda x: np.full_like(x, 2.5)))
    checked = 0
    for j, lam in haar_pair.index:
        if j < 0:
            continue
        a, b = HAAR.atom_support(j, lam, "dual")[0]
        if 0 < a and b < 1:
            assert abs(c.get((j, lam))) < 1e-12
            checked += 1
    assert checked > 20


def test_analysis_matches_quadrature():
    dfp = build_domain_frame_pair(CDF22, INTERVAL, j_max=4, level=8)
    f = dfp.sample(lambda x: np.cos(3 * x) + x**2)
    c = domain_analysis(dfp, f)
    E = extend(dfp.extension, INTERVAL, f)
    fine = DyadicGrid.zeros(14, ((-3, 4),))
    # piecewise-linear interpolant of Ef paired with cascade samples of the dual atoms
    fi = np.interp(fine.coords()[0], E.coords()[0], E.values, left=0.0, right=0.0)
    for (j, lam), v in c.items():
        oracle = 2.0**-14 * np.sum(fi * evaluate_atom(CDF22, "dual", j, lam, fine).values)
        assert abs(oracle - v) < 1e-7


def test_reconstruction(cdf_pair, rng):
    for _ in range(10):
        coef = rng.standard_normal(5)
        f = cdf_pair.sample(lambda x: np.polynomial.polynomial.polyval(x, coef))
        back = domain_synthesis(cdf_pair, domain_analysis(cdf_pair, f))
        h = 2.0**-cdf_pair.level
        assert math.sqrt(h * np.sum((back.values - f.values) ** 2)) < 1e-6


def test_straddling_atom_is_cut(cdf_pair):
    key = (2, (1, -1))
    a, b = CDF22.atom_support(*key)[0]
    assert a < 0 < b
    out = domain_synthesis(cdf_pair, CoefficientArray({key: 1.0}))
    full = evaluate_atom(CDF22, "primal", *key, cdf_pair.grid()).values
    x = out.coords()[0]
    assert np.array_equal(out.values, np.where((x >= 0) & (x <= 1), full, 0.0))
    assert np.any(full[x > 0] != 0)


def test_synthesis_linearity(cdf_pair, rng):
    keys = list(cdf_pair.index)
    pick = lambda: CoefficientArray({keys[i]: float(rng.standard_normal())
                                     for i in rng.choice(len(keys), 15, replace=False)})
    c1, c2 = pick(), pick()
    lhs = domain_synthesis(cdf_pair, c1 + c2).values
    rhs = domain_synthesis(cdf_pair, c1).values + domain_synthesis(cdf_pair, c2).values
    assert np.abs(lhs - rhs).max() < 1e-12


def test_synthesis_rejects_foreign_index(cdf_pair):
    with pytest.raises(CoefficientIndexError):
        domain_synthesis(cdf_pair, CoefficientArray({(2, (1, 40)): 1.0}))


# -- norms and n-term ---------------------------------------------------------------


def test_hs_norm_basics(haar_pair, rng):
    zero = haar_pair.sample(lambda x: 0 * x)
    assert hs_norm_estimate(haar_pair, zero) == 0.0
    for _ in range(3):
        coef = rng.standard_normal(4)
        f = haar_pair.sample(lambda x: np.polynomial.polynomial.polyval(x, coef))
        E = extend(haar_pair.extension, INTERVAL, f)
        grid_l2 = math.sqrt(2.0**-E.level * np.sum(E.values[:-1] ** 2))
        est = hs_norm_estimate(haar_pair, f)
        assert 0.9 <= est / grid_l2 <= 1.1
        assert hs_norm_estimate(haar_pair, f.with_values(2 * f.values)) == pytest.approx(2 * est, rel=1e-13)


def test_regularity_guard():
    with pytest.raises(RegularityError):
        build_domain_frame_pair(CDF22, INTERVAL, s=1.0, j_max=3)
    dfp = build_domain_frame_pair(CDF22, INTERVAL, j_max=3)
    with pytest.raises(RegularityError):
        hs_norm_estimate(dfp, dfp.grid(), s=0.5)


def test_sigma_edge_cases(cdf_pair, rng):
    f = cdf_pair.sample(lambda x: np.sin(5 * x))
    c = domain_analysis(cdf_pair, f)
    full = sigma_n_frame(cdf_pair, f, len(c))
    assert full.error == 0.0 and full.grid_error < 1e-6
    key = (4, (1, 7))
    atom = cdf_pair.grid().with_values(evaluate_atom(CDF22, "primal", *key, cdf_pair.grid()).values)
    one = sigma_n_frame(cdf_pair, atom, 1)
    assert one.indices == [key] and one.error < 1e-8


def test_sigma_nonincreasing(cdf_pair, rng):
    f = cdf_pair.sample(lambda x: np.abs(x - 0.3) + rng.standard_normal() * x**3)
    errs = [sigma_n_frame(cdf_pair, f, n).error for n in range(0, 80, 5)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_smooth_bump_decays_fast():
    dfp = build_domain_frame_pair(CDF22, INTERVAL, j_max=8)
    bump = dfp.sample(lambda x: np.exp(4 - 1 / np.maximum(x * (1 - x), 1e-300)))
    ns = [4, 8, 16, 32, 64, 128, 256]
    rep = fit_rate([(n, sigma_n_frame(dfp, bump, n).error) for n in ns], (4, 256))
    assert rep.slope <= -1


def test_truncation_proxy(cdf_pair):
    f = cdf_pair.sample(lambda x: np.sqrt(np.abs(x - 0.5)))
    res = sigma_n_frame(cdf_pair, f, 10)
    top = domain_analysis(cdf_pair, f).restrict(lambda key: key[0] == cdf_pair.j_max)
    assert res.truncation == pytest.approx(besov_seq_norm(top, BesovParams(0, 2, 2)))


# -- stability ------------------------------------------------------------------------


def test_haar_stable_box(haar_pair):
    rep = stable_box_subframe(haar_pair, BOX)
    assert rep.onset == 2
    assert rep.cardinalities == {2: 2, 3: 4, 4: 8, 5: 16}
    riesz = riesz_lower_bound(HAAR, -1, 5)
    assert 0.5 <= rep.A_prime / riesz <= 2
    assert rep.leakage < 1e-12


def test_box_must_stay_inside(haar_pair):
    with pytest.raises(GeometryError):
        stable_box_subframe(haar_pair, ((0, 1),))
    with pytest.raises(GeometryError):
        build_domain_frame_pair(HAAR, INTERVAL, j_max=3, stable_box=((0, 0.5),))


def test_single_coefficient_probe(haar_pair):
    fr = haar_pair.frame
    key = (3, (1, 3))
    col = fr.labels.index(key)
    mask, _ = haar_pair.metric
    probe = evaluate_atom(HAAR, "primal", *key, haar_pair.grid()).values[mask]
    # one-term ratio ||c g|| / (sqrt(w)|c|) for a unit-norm Haar atom at s = 0
    assert abs(fr.coefficients(probe)[col] - 1) < 1e-12
    assert check_stability(fr, [[col]], [probe]) == pytest.approx(1.0, abs=1e-8)


def test_frame_axioms_on_model(haar_pair, rng):
    fr = haar_pair.frame
    assert 0 < fr.A <= fr.B < math.inf
    for _ in range(10):
        f = rng.standard_normal(fr.dim)
        assert fr.norm(fr.synthesize(fr.coefficients(f)) - f) < 1e-6 * fr.norm(f)


def test_frame_carries_stable_box_constant(haar_pair, cdf_pair):
    assert haar_pair.frame.A_prime == pytest.approx(stable_box_subframe(haar_pair, BOX).A_prime, rel=1e-12)
    # without a box the declared constant falls back to the measured lower frame bound
    assert cdf_pair.frame.A_prime == cdf_pair.frame.A
