"""Why frames need a stability constant, and what thresholding buys.

Run: python demos/frame_stability.py
"""

import numpy as np

from framewidths.frames import (
    check_stability,
    continuous_n_term,
    n_term_error,
    pathological_frame,
    random_subsets,
    riesz_basis_frame,
    singleton_subsets,
    tight_duplicate,
    tight_growing,
)

rng = np.random.default_rng(1)


def sampled_A_prime(frame):
    subsets = singleton_subsets(frame) + random_subsets(frame, 50, rng)
    probes = list(np.eye(frame.dim)) + [rng.standard_normal(frame.dim) for _ in range(10)]
    return check_stability(frame, subsets, probes)


# Orthonormal basis plus a normalized copy of its first element, all scaled to be tight.
fr = tight_duplicate(6)
print(f"tight duplicate: {fr.size} elements in R^{fr.dim}, A={fr.A:.6f}, B={fr.B:.6f}, "
      f"A'~{sampled_A_prime(fr):.6f}")

# Splitting one direction into m pieces keeps A = B = 1 but partial sums degrade.
print("\nsplitting a direction into m equal pieces:")
for m in (1, 4, 16, 30):
    g = tight_growing(m)
    print(f"  m={m:2d}: A={g.A:.3f}  B={g.B:.3f}  A'~{sampled_A_prime(g):.3f}")

# A nearly orthonormal frame that approximates any finite sample set with one term.
probes = rng.standard_normal((8, 16))
probes /= np.linalg.norm(probes, axis=1, keepdims=True)
frame, rec = pathological_frame(probes, delta=0.1)
print(f"\npathological frame: B/A = {frame.B / frame.A:.4f}, "
      f"largest 1-term distance {max(rec.distances):.1e}")

# Soft thresholding: a continuous map, at most 2n terms, error within 2B/A of sigma_n.
# With a flat coefficient profile the threshold may drop every term and still meet the bound.
fr = riesz_basis_frame(64, rng)
f = rng.standard_normal(64) * np.exp(-0.2 * np.arange(64))
print(f"\nRiesz basis model: A={fr.A:.3f}, B={fr.B:.3f}")
for n in (4, 8, 16):
    sigma, _ = n_term_error(fr, f, n)
    res = continuous_n_term(fr, f, n, sigma)
    print(f"  n={n:2d}: sigma_n={sigma:.3e}, kept {res.kept_count:2d} terms, error {res.error:.3e} "
          f"(bound {res.bound:.3e})")
