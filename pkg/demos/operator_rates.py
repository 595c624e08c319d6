"""Rates after a solution operator: 1D Poisson and the single layer on the circle.

Run: python demos/operator_rates.py
"""

import math

from framewidths.besov import BesovParams
from framewidths.experiments import rate_experiment
from framewidths.operators import (
    FourierCoefficients,
    SineSeries,
    poisson_residual,
    poisson_solve_1d,
    single_layer_apply,
    single_layer_quadrature,
)

f = SineSeries([1.0, 0.0, 0.5])
u = poisson_solve_1d(f)
print(f"-u'' = f on (0,1): sine coefficients {u.coeffs}, residual {poisson_residual(u, f, 10):.1e}")

# The single layer operator scales mode k by 1/(2|k|); a direct quadrature agrees.
phi = FourierCoefficients.from_trig(cos={2: 1.0})
theta = 0.3
print(f"single layer of cos(2t) at {theta}: spectral {single_layer_apply(phi).evaluate(theta):.10f}, "
      f"quadrature {single_layer_quadrature(lambda t: math.cos(2 * t), theta):.10f}")

ns = [16, 32, 64, 128, 256, 512]
rep = rate_experiment("single-layer", BesovParams(2.0, 2.0, 2.0), n_list=ns)
print(f"\nsingle layer, wavelet dictionary: slope {rep.slope:.3f}, expected {rep.target_slope}")
# Fourier terms are not adapted to p < 2 data: the rate loses about 1/p - 1/2.
rep = rate_experiment("single-layer", BesovParams(2.0, 1.0, 1.0), n_list=ns, dictionary="trig")
print(f"single layer, Fourier dictionary, p=1: slope {rep.slope:.3f}")

# In H^1 the CDF(2,4) splines cap the rate at 1 no matter how smooth the data.
rep = rate_experiment("domain-poisson", BesovParams(1.0, 2.0, 2.0), n_list=ns[:-1])
print(f"domain Poisson: slope {rep.slope:.3f}, smoothness gap {rep.meta['t']}, "
      f"spline cap {rep.meta['rate_cap']}, saturated: {rep.meta['saturated']}")
