"""How closely is the closed form a stationary potential solution?

The curl of the potential field and the Fokker-Planck residual both vanish
only at leading order in g; halving g shows which order survives.
"""

from wigner_opo.cli import curl_defect, residual_scaling
from wigner_opo.model import OpoParams

for g2 in (0.04, 0.01, 0.0025):
    curl = curl_defect(OpoParams(0.8, g2), n_points=20)
    print(f"g2={g2:<7} max antisymmetric part of dZ = {curl:.3e}")

hi, lo, ratio = residual_scaling(0.8, 0.01)
print(f"median stationarity residual: {hi:.3e} (g2=0.01), {lo:.3e} (g2=0.0025), ratio {ratio:.2f}")
