"""How large can the sampling-induced error get?

Between two sampling instants the error e(t) = x(t_k) - x(t) is a running
sum of state increments.  Its squared l2 gain is the top eigenvalue of a
small structured matrix.  We compare it with the Frobenius bound and the
older closed-form bound h(h-1)/2.
"""
import numpy as np

from aperiodic_msi import SamplingPattern, apply_delay, build_E, gain_bundle, lifted_matrix

print("E for hbar = 4:\n", build_E(4))

print(f"\n{'hbar':>5} {'exact':>12} {'frobenius':>12} {'legacy':>12} {'ratio':>8}")
for h in (2, 3, 5, 10, 50, 136, 500):
    b = gain_bundle(h)
    print(f"{h:>5} {b.exact_sq_gain:12.3f} {b.frobenius_sq_gain:12.3f} "
          f"{b.legacy_sq_gain:12.1f} {b.ratios()[0]:8.4f}")

# the worst-case input over one interval is the top right singular vector
h = 20
v = np.linalg.svd(lifted_matrix(h))[2][0]
e = apply_delay(v, SamplingPattern((h,), h))
print(f"\nworst-case amplification over one interval of length {h}: "
      f"{np.sum(e**2) / np.sum(v**2):.4f} (exact squared gain {gain_bundle(h).exact_sq_gain:.4f})")
