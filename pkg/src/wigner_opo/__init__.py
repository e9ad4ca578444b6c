"""Steady-state Wigner distribution of a nondegenerate parametric oscillator.

The package evaluates a closed-form truncated-Wigner steady state, computes
its moments by quadrature and importance sampling, integrates the underlying
stochastic equations, and compares against linearized fluctuation theory.
"""

__version__ = "0.1.0"

from .model import OpoParams, PhasePoint, EprPoint, ThreeModeState  # noqa: E402
from .steady_state import (  # noqa: E402
    GridSpec, TailTooHeavy, DegenerateField, normalize, log_weight, marginal,
    conditional_slice, count_peaks,
)
from .moments import (  # noqa: E402
    MomentSet, quadrature_moments, importance_moments, linearized_moments,
    duan_simon, mean_photon, variance_sweep, EffectiveSampleTooSmall,
)
from .linearized import DomainError  # noqa: E402
from .sde import IntegratorConfig, simulate_ensemble, NonFinite  # noqa: E402

__all__ = [
    "__version__", "OpoParams", "PhasePoint", "EprPoint", "ThreeModeState",
    "GridSpec", "TailTooHeavy", "DegenerateField", "normalize", "log_weight", "marginal",
    "conditional_slice", "count_peaks", "MomentSet", "quadrature_moments",
    "importance_moments", "linearized_moments", "duan_simon", "mean_photon",
    "variance_sweep", "EffectiveSampleTooSmall", "DomainError", "IntegratorConfig",
    "simulate_ensemble", "NonFinite",
]
