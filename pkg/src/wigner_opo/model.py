"""Parameters and deterministic fields of the truncated-Wigner OPO dynamics.

All phase-space functions are vectorised: a point is anything that converts
to an array whose last axis holds ``(x1, y1, x2, y2)``.  Time is measured in
units of ``1/gamma`` unless ``gamma`` is set explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "OpoParams",
    "PhasePoint",
    "EprPoint",
    "ThreeModeState",
    "drift",
    "noise_matrix",
    "diffusion",
    "diffusion_divergence",
    "potential_gradient",
    "to_epr",
    "from_epr",
    "counter_rotate",
    "swap_modes",
    "three_mode_drift",
    "adiabatic_pump",
    "quadratures",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class OpoParams:
    """Dimensionless control parameters of the nondegenerate OPO.

    Parameters
    ----------
    mu : float
        Normalized pump amplitude; threshold at ``mu = 1``.
    g2 : float
        Squared nonlinear coupling ``g**2``.  ``0`` is the linear (Gaussian)
        limit; it is accepted by the two-mode functions but leaves the pump
        amplitude of the three-mode model undefined.
    gamma : float
        Signal/idler damping rate (sets the time unit).
    gamma0_ratio : float
        Pump to signal damping ratio ``gamma0/gamma``; only used by the
        three-mode model.
    """

    mu: float
    g2: float
    gamma: float = 1.0
    gamma0_ratio: float = 100.0

    def __post_init__(self):
        for name in ("mu", "g2", "gamma", "gamma0_ratio"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.g2 < 0:
            raise ValueError(f"g2 must be >= 0, got {self.g2}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.gamma0_ratio < 1:
            raise ValueError(f"gamma0_ratio must be >= 1, got {self.gamma0_ratio}")

    @property
    def g(self) -> float:
        return math.sqrt(self.g2)

    @property
    def gamma0(self) -> float:
        return self.gamma * self.gamma0_ratio

    @property
    def chi(self) -> float:
        """Nonlinear coupling constant implied by ``g`` and ``gamma0``."""
        return self.g * math.sqrt(2.0 * self.gamma * self.gamma0)

    @property
    def pump(self) -> float:
        """Real, positive drive amplitude ``E`` giving this ``mu``."""
        if self.g2 == 0:
            raise ValueError("the pump amplitude is undefined in the g2 = 0 limit")
        return self.mu * self.gamma * self.gamma0 / self.chi

    @property
    def x_star(self) -> float:
        """Above-threshold fixed point of the symmetric drift (0 below)."""
        if self.mu <= 1.0:
            return 0.0
        return math.sqrt(2.0 * (self.mu - 1.0) / self.g2) if self.g2 > 0 else math.inf


class PhasePoint(NamedTuple):
    x1: float
    y1: float
    x2: float
    y2: float


class EprPoint(NamedTuple):
    xp: float
    yp: float
    xm: float
    ym: float


class ThreeModeState(NamedTuple):
    a0: complex
    a1: complex
    a2: complex


def _split(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 4:
        raise ValueError(f"phase-space points need a last axis of length 4, got {p.shape}")
    return p[..., 0], p[..., 1], p[..., 2], p[..., 3]


def drift(p, params: OpoParams) -> np.ndarray:
    """Drift vector ``A(X)`` of the adiabatically reduced two-mode model."""
    x1, y1, x2, y2 = _split(p)
    mu, h = params.mu, 0.5 * params.g2
    r1 = x1 * x1 + y1 * y1
    r2 = x2 * x2 + y2 * y2
    out = np.stack(
        [
            -x1 + mu * x2 - h * x1 * r2,
            -y1 - mu * y2 - h * y1 * r2,
            -x2 + mu * x1 - h * x2 * r1,
            -y2 - mu * y1 - h * y2 * r1,
        ],
        axis=-1,
    )
    return params.gamma * out


def noise_matrix(p, params: OpoParams) -> np.ndarray:
    """The 4x6 noise matrix ``B(X)``; columns 5-6 carry the pump noise."""
    x1, y1, x2, y2 = _split(p)
    c = params.g / _SQRT2
    B = np.zeros(np.shape(x1) + (4, 6))
    B[..., 0, 0] = B[..., 1, 1] = B[..., 2, 2] = B[..., 3, 3] = 1.0
    B[..., 0, 4], B[..., 0, 5] = c * x2, c * y2
    B[..., 1, 4], B[..., 1, 5] = -c * y2, c * x2
    B[..., 2, 4], B[..., 2, 5] = c * x1, c * y1
    B[..., 3, 4], B[..., 3, 5] = -c * y1, c * x1
    return math.sqrt(2.0 * params.gamma) * B


def diffusion(p, params: OpoParams) -> np.ndarray:
    """Diffusion matrix ``D = B B^T`` in closed form.

    ``D = 2 gamma (I + g^2/2 M)`` where ``M`` couples the two modes through
    ``c = x1 x2 + y1 y2`` and ``s = x1 y2 - y1 x2``.
    """
    x1, y1, x2, y2 = _split(p)
    h = 0.5 * params.g2
    r1 = x1 * x1 + y1 * y1
    r2 = x2 * x2 + y2 * y2
    c = x1 * x2 + y1 * y2
    s = x1 * y2 - y1 * x2
    D = np.zeros(np.shape(x1) + (4, 4))
    D[..., 0, 0] = D[..., 1, 1] = 1.0 + h * r2
    D[..., 2, 2] = D[..., 3, 3] = 1.0 + h * r1
    D[..., 0, 2] = D[..., 2, 0] = D[..., 1, 3] = D[..., 3, 1] = h * c
    D[..., 0, 3] = D[..., 3, 0] = h * s
    D[..., 1, 2] = D[..., 2, 1] = -h * s
    return 2.0 * params.gamma * D


def diffusion_divergence(p, params: OpoParams) -> np.ndarray:
    """Row divergence ``sum_j dD_ij/dX_j``, which equals ``2 gamma g^2 X``."""
    p = np.asarray(p, dtype=float)
    _split(p)
    return 2.0 * params.gamma * params.g2 * p


def potential_gradient(p, params: OpoParams, *, drift_fn=drift) -> np.ndarray:
    """Gradient ``Z`` of the potential ``-log W`` of the zero-current solution.

    Solves ``D Z = -(2A - div D)`` pointwise, so that ``W ~ exp(-int Z dX)``.
    ``drift_fn`` exists for mutation tests of the curl diagnostic.
    """
    p = np.asarray(p, dtype=float)
    rhs = -(2.0 * drift_fn(p, params) - diffusion_divergence(p, params))
    return np.linalg.solve(diffusion(p, params), rhs[..., None])[..., 0]


def to_epr(p) -> np.ndarray:
    """Map ``(x1, y1, x2, y2)`` to ``(x+, y+, x-, y-)``."""
    x1, y1, x2, y2 = _split(p)
    return np.stack([x1 + x2, y1 + y2, x1 - x2, y1 - y2], axis=-1) / _SQRT2


def from_epr(e) -> np.ndarray:
    """Inverse of :func:`to_epr`."""
    xp, yp, xm, ym = _split(e)
    return np.stack([xp + xm, yp + ym, xp - xm, yp - ym], axis=-1) / _SQRT2


def counter_rotate(p, theta) -> np.ndarray:
    """Rotate mode 1 by ``theta`` and mode 2 by ``-theta`` in phase space.

    This is ``a1 -> a1 exp(i theta)``, ``a2 -> a2 exp(-i theta)``, the
    continuous symmetry of the phase-matched OPO.
    """
    x1, y1, x2, y2 = _split(p)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack(
        [c * x1 - s * y1, s * x1 + c * y1, c * x2 + s * y2, -s * x2 + c * y2], axis=-1
    )


def swap_modes(p) -> np.ndarray:
    x1, y1, x2, y2 = _split(p)
    return np.stack([x2, y2, x1, y1], axis=-1)


def three_mode_drift(s, params: OpoParams, E=None) -> np.ndarray:
    """Deterministic part of the three-mode rotating-frame equations.

    Each mode is damped on its own amplitude.  ``s`` has a last axis
    ``(a0, a1, a2)`` of complex amplitudes; ``E`` defaults to
    :attr:`OpoParams.pump`.
    """
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != 3:
        raise ValueError(f"three-mode states need a last axis of length 3, got {s.shape}")
    E = params.pump if E is None else E
    a0, a1, a2 = s[..., 0], s[..., 1], s[..., 2]
    g, g0, chi = params.gamma, params.gamma0, params.chi
    return np.stack(
        [
            -g0 * a0 + E - chi * a1 * a2,
            -g * a1 + chi * a0 * np.conj(a2),
            -g * a2 + chi * a0 * np.conj(a1),
        ],
        axis=-1,
    )


def adiabatic_pump(a1, a2, params: OpoParams, E=None, noise=0.0):
    """Pump amplitude slaved to the signal and idler (``gamma0 >> gamma``).

    ``noise`` is the pump noise ``xi0(t)``; pass 0 for the deterministic part.
    """
    E = params.pump if E is None else E
    g0 = params.gamma0
    return (E - params.chi * np.asarray(a1) * np.asarray(a2) + math.sqrt(g0) * noise) / g0


def quadratures(s) -> np.ndarray:
    """Signal/idler quadratures ``(x1, y1, x2, y2)`` of a three-mode state."""
    s = np.asarray(s, dtype=complex)
    a1, a2 = s[..., 1], s[..., 2]
    return np.stack([2 * a1.real, 2 * a1.imag, 2 * a2.real, 2 * a2.imag], axis=-1)
