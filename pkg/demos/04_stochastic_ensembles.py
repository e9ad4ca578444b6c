"""Integrate the stochastic equations and compare with the closed form.

A short ensemble (64 trajectories) keeps the run near half a minute; the
acceptance suite uses 200.
"""

import math

from wigner_opo import IntegratorConfig, OpoParams, quadrature_moments, simulate_ensemble

for mu in (0.0, 0.5, 1.2):
    p = OpoParams(mu, 0.01)
    q = quadrature_moments(p)
    print(f"mu={mu}")
    for model in ("reduced", "full"):
        cfg = IntegratorConfig.default(p, model, n_traj=64, t_total=120.0)
        m = simulate_ensemble(p, cfg, model)
        for k in ("x1sq", "xpsq", "xmsq"):
            z = (m.value(k) - q.value(k)) / math.hypot(m.err(k), q.err(k))
            print(f"  {model:>7} <{k}> = {m.value(k):9.4f} +- {m.err(k):.4f}"
                  f"   closed form {q.value(k):9.4f}   z = {z:+6.2f}")
