"""Discrete Besov balls and greedy n-term approximation.

Run: python demos/sequence_rates.py
"""

import numpy as np

from framewidths.besov import (
    BesovParams,
    CoefficientArray,
    Weight,
    besov_seq_norm,
    exhaustive_n_term_oracle,
    extremal_ball_element,
    greedy_n_term,
)
from framewidths.experiments import rate_experiment

src = BesovParams(s=1.0, p=1.0, q=2.0)
print(f"source space b^{src.s}_{{{src.p},{src.q}}}: level exponent {src.exponent:.2f}")

# The equal-block extremal element fills levels 0..J with one constant.
a = extremal_ball_element(src, 6, "equal-block")
print(f"equal-block element: {len(a)} entries, norm {besov_seq_norm(a, src):.6f}")

# Keeping the largest weighted coefficients is optimal in a weighted l2 target.
rng = np.random.default_rng(0)
w = Weight.sobolev(0.0)
b = CoefficientArray({(j, (1, k)): float(rng.standard_normal()) for j in range(3) for k in range(4)})
for n in (1, 4, 8):
    g, e = greedy_n_term(b, n, w)[1], exhaustive_n_term_oracle(b, n, w)[1]
    print(f"n={n}: greedy {g:.6f}, exhaustive over all subsets {e:.6f}")

# Worst-case error over the unit ball decays like n^{-t}, t the smoothness gap.
for p, t in [(1.0, 1.0), (2 / 3, 1.5)]:
    rep = rate_experiment("sequence", BesovParams(t, p, 2.0), 0.0, [16, 32, 64, 128, 256, 512, 1024])
    print(f"p={p:.3g}, t={t}: fitted slope {rep.slope:.3f} (expected {-t})")
    for n, err in rep.samples[::2]:
        print(f"   n={n:5d}  error {err:.3e}")
