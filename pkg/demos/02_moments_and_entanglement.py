"""EPR variances and the Duan-Simon sum from three independent estimators.

Quadrature and importance sampling integrate the same closed-form steady
state; the linearized column is the Gaussian small-fluctuation theory.
"""

from wigner_opo import (
    OpoParams, DomainError, duan_simon, importance_moments, linearized_moments, mean_photon,
    quadrature_moments,
)

G2 = 0.01
print(f"{'mu':>4} {'method':>11} {'<x+^2>':>10} {'<x-^2>':>9} {'S':>8} entangled  n1")
for mu in (0.0, 0.5, 1.0, 1.5):
    p = OpoParams(mu, G2)
    rows = [quadrature_moments(p), importance_moments(p, 200_000, seed=1)]
    try:
        rows.append(linearized_moments(p))
    except DomainError:
        pass  # no linearized value exactly at threshold
    for m in rows:
        s = duan_simon(m)
        n1 = mean_photon(m)[0]
        print(f"{mu:4.1f} {m.method:>11} {m.exp_xpsq:10.4f} {m.exp_xmsq:9.4f} {s.value:8.4f} "
              f"{str(s.entangled):>9} {n1:6.3f}")
