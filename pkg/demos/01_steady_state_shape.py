"""Shape of the steady state below, at and above threshold.

Prints the peaks of the y1 = y2 = 0 slice and the radial profile of the
single-mode marginal.  Run: python demos/01_steady_state_shape.py
"""

import numpy as np

from wigner_opo import OpoParams, conditional_slice, count_peaks, marginal

G2 = 0.01

for mu in (0.5, 1.0, 1.5):
    p = OpoParams(mu, G2)
    peaks = count_peaks(conditional_slice(p))
    where = ", ".join(f"({a:+.2f}, {b:+.2f})" for a, b in peaks.coords)
    print(f"mu={mu:3.1f}: {peaks.count} peak(s) in the (x1, x2) slice at {where}"
          f"   [drift fixed point x* = {p.x_star:.2f}]")

# The joint distribution is a ring in the counter-rotation angle, so each
# mode on its own has no phase: its marginal depends on r2 only.
r = np.linspace(0, 12, 12001)
print("\nmarginal of mode 2 (prefactor-free), maximum over r2:")
for mu in (0.8, 1.0, 1.2):
    prof = marginal(r, 0.0, OpoParams(mu, G2))
    k = int(np.argmax(prof))
    print(f"  mu={mu:3.1f}: r2_max = {r[k]:.3f}, W(0)/W(r2_max) = {prof[0] / prof[k]:.3f}")
