"""Biorthogonal spline wavelets: filters, transforms and vanishing moments.

Run: python demos/wavelets_tour.py
"""

import numpy as np

from framewidths.wavelets import (
    DyadicGrid,
    analyze,
    build_system,
    perfect_reconstruction_residual,
    synthesize,
    vanishing_moments_check,
)

for family in [(1, 1), (2, 2), (2, 4)]:
    ws = build_system(family)
    print(f"CDF{family}: support radius N={ws.support_radius}, regularity r~{ws.r:.3f}, "
          f"vanishing moments {ws.vanishing_moments}, PR residual {perfect_reconstruction_residual(ws):.1e}")

# A smooth bump sampled at level 9 on [0, 4].  Its detail coefficients
# shrink by a fixed factor per level, so almost all energy is coarse.
ws = build_system((2, 4))
f = DyadicGrid.from_function(lambda x: np.exp(-4 * (x - 2) ** 2), 9, [(0, 4)])
c = analyze(ws, f)
print(f"\n{len(c)} nonzero coefficients for a Gaussian bump")
for j in range(0, 9, 2):
    vals = [abs(v) for (lev, _), v in c.items() if lev == j]
    print(f"  level {j}: max |coefficient| = {max(vals, default=0.0):.2e}")

back = synthesize(ws, c, f)
print(f"round trip max error: {np.abs(back.values - f.values).max():.1e}")

# Moments of the primal wavelet vanish up to the declared order and no further.
order = ws.vanishing_moments[0]
m = vanishing_moments_check(ws, order + 1)
print(f"\nprimal wavelet moments of CDF(2,4) up to order {order + 1}:")
for (_, alpha), val in m.items():
    print(f"  x^{alpha[0]}: {val:.2e}")
