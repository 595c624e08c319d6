import math

import pytest

from framewidths.besov import BesovParams
from framewidths.errors import ConfigurationError, FitError, ParameterError, RegularityError
from framewidths.experiments import default_levels, rate_experiment

NS = [16, 32, 64, 128, 256]


def test_sequence_slope_p1():
    rep = rate_experiment("sequence", BesovParams(1.0, 1.0, 1.0), 0.0, NS + [512, 1024])
    assert rep.target_slope == -1.0
    assert abs(rep.slope + 1.0) < 0.1
    assert rep.is_monotone


def test_sequence_slope_scales_with_dimension():
    # in d = 2 the same smoothness gap yields half the rate per term
    rep = rate_experiment("sequence", BesovParams(1.0, 2.0, 2.0, d=2), 0.0, NS, n_random=8)
    assert rep.target_slope == pytest.approx(-0.5)
    assert abs(rep.slope + 0.5) < 0.1


def test_samples_are_sorted_and_deduplicated():
    rep = rate_experiment("sequence", BesovParams(1.0, 1.0, 2.0), 0.0, [64, 16, 32, 16, 128], n_random=4)
    assert [n for n, _ in rep.samples] == [16, 32, 64, 128]
    assert all(e >= 0 and math.isfinite(e) for _, e in rep.samples)


def test_seed_reproducible():
    a = rate_experiment("sequence", BesovParams(1.0, 1.0, 2.0), 0.0, NS, seed=7, n_random=16)
    b = rate_experiment("sequence", BesovParams(1.0, 1.0, 2.0), 0.0, NS, seed=7, n_random=16)
    assert a.samples == b.samples and a.to_csv() == b.to_csv()


def test_too_few_points_to_fit():
    with pytest.raises(FitError):
        rate_experiment("sequence", BesovParams(1.0, 1.0, 2.0), 0.0, [32])


def test_unknown_kind_and_dictionary():
    with pytest.raises(ConfigurationError, match="sequence"):
        rate_experiment("heat", BesovParams(1.0, 2.0, 2.0))
    with pytest.raises(ConfigurationError, match="trig"):
        rate_experiment("single-layer", BesovParams(2.0, 2.0, 2.0), dictionary="curvelet")
    with pytest.raises(ConfigurationError):
        rate_experiment("single-layer", BesovParams(2.0, 2.0, 2.0, d=2), n_list=NS)


def test_t_condition_violation():
    # t = 0.2 <= 1/p - 1/2 = 0.5
    with pytest.raises(ParameterError, match="t ="):
        rate_experiment("sequence", BesovParams(0.2, 1.0, 2.0), 0.0, NS)


def test_wavelet_dictionary_needs_regularity():
    # CDF(2,2) has r ~ 0.44, too rough for H^-1/2
    with pytest.raises(RegularityError):
        rate_experiment("single-layer", BesovParams(2.0, 2.0, 2.0), n_list=NS, family=(2, 2))


def test_single_layer_trig_slope():
    rep = rate_experiment("single-layer", BesovParams(2.0, 2.0, 2.0), n_list=NS + [512], dictionary="trig",
                          n_random=16)
    assert rep.meta["t"] == pytest.approx(1.5)
    assert abs(rep.slope + 1.5) < 0.15
    assert rep.is_monotone


def test_domain_poisson_reports_saturation():
    rep = rate_experiment("domain-poisson", BesovParams(1.0, 2.0, 2.0), n_list=NS, n_random=8)
    # CDF(2,4) primal splines reproduce linears: cap = 2 - 1 = 1 below t = 2
    assert rep.meta["rate_cap"] == pytest.approx(1.0)
    assert rep.meta["saturated"] is True
    assert rep.is_monotone
    assert abs(rep.slope + 1.0) < 0.2


def test_default_levels():
    assert default_levels("sequence", 1024) == 13
    assert default_levels("single-layer", 512) == 11
    assert default_levels("sequence", 1) == 4
    # level j holds 2^(jd) coefficients, so octaves are divided by d
    assert default_levels("sequence", 256, d=2) == 7
