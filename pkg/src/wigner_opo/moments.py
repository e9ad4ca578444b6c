"""Stationary second moments, EPR variances and entanglement diagnostics.

Two independent estimators of the steady-state moments live here: a
tensor-grid trapezoid rule (:func:`quadrature_moments`) and self-normalized
importance sampling (:func:`importance_moments`).  Both return a
:class:`MomentSet`; so do the stochastic ensembles in :mod:`wigner_opo.sde`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from . import linearized
from ._parallel import generator
from .model import OpoParams, counter_rotate, from_epr, to_epr
from .steady_state import GridSpec, default_grid, grid_reduce, log_weight

__all__ = [
    "MomentSet",
    "EffectiveSampleTooSmall",
    "DuanSimon",
    "SweepRow",
    "quadrature_moments",
    "importance_moments",
    "linearized_moments",
    "duan_simon",
    "mean_photon",
    "variance_sweep",
    "METHODS",
]

BASE_KEYS = ("x1sq", "y1sq", "x2sq", "y2sq", "x1x2", "y1y2")
EPR_KEYS = ("xpsq", "xmsq", "ypsq", "ymsq")
METHODS = ("linearized", "quadrature", "importance", "sde")


class EffectiveSampleTooSmall(RuntimeError):
    """Importance weights degenerate: the proposal misses the target."""


@dataclass
class MomentSet:
    """Symmetric-ordered second moments of the signal and idler quadratures.

    ``error`` maps ``x1sq ... y1y2``, ``xpsq ... ymsq`` and ``S`` to a one-sigma
    uncertainty (statistical, or a numerical-error bound for quadrature).
    """

    exp_x1sq: float
    exp_y1sq: float
    exp_x2sq: float
    exp_y2sq: float
    exp_x1x2: float
    exp_y1y2: float
    error: dict = field(default_factory=dict)
    method: str = ""
    n_eff: float | None = None

    @property
    def exp_xpsq(self) -> float:
        return 0.5 * (self.exp_x1sq + self.exp_x2sq) + self.exp_x1x2

    @property
    def exp_xmsq(self) -> float:
        return 0.5 * (self.exp_x1sq + self.exp_x2sq) - self.exp_x1x2

    @property
    def exp_ypsq(self) -> float:
        return 0.5 * (self.exp_y1sq + self.exp_y2sq) + self.exp_y1y2

    @property
    def exp_ymsq(self) -> float:
        return 0.5 * (self.exp_y1sq + self.exp_y2sq) - self.exp_y1y2

    def value(self, key: str) -> float:
        if key == "S":
            return self.exp_xmsq + self.exp_ypsq
        return getattr(self, "exp_" + key)

    def err(self, key: str) -> float:
        return self.error.get(key, 0.0)

    def as_dict(self) -> dict:
        out = {k: self.value(k) for k in BASE_KEYS + EPR_KEYS + ("S",)}
        out.update({"err_" + k: self.err(k) for k in BASE_KEYS + EPR_KEYS + ("S",)})
        return out

    @classmethod
    def from_values(cls, values: dict, errors: dict | None = None, method: str = ""):
        return cls(*(float(values[k]) for k in BASE_KEYS), error=dict(errors or {}), method=method)

    @classmethod
    def from_epr(cls, xpsq, xmsq, ypsq, ymsq, error=None, method: str = ""):
        """Mode-symmetric moment set with prescribed EPR variances."""
        x = 0.5 * (xpsq + xmsq)
        y = 0.5 * (ypsq + ymsq)
        return cls(x, y, x, y, 0.5 * (xpsq - xmsq), 0.5 * (ypsq - ymsq),
                   error=dict(error or {}), method=method)


def _with_derived(values: dict) -> dict:
    """Add EPR variances and the Duan-Simon sum to a dict of base moments."""
    v = dict(values)
    sx = 0.5 * (v["x1sq"] + v["x2sq"])
    sy = 0.5 * (v["y1sq"] + v["y2sq"])
    v["xpsq"], v["xmsq"] = sx + v["x1x2"], sx - v["x1x2"]
    v["ypsq"], v["ymsq"] = sy + v["y1y2"], sy - v["y1y2"]
    v["S"] = v["xmsq"] + v["ypsq"]
    return v


def _grid_values(params, grid):
    sums = grid_reduce(params, grid)
    m = sums.moments
    for k in ("x1", "y1", "x2", "y2"):
        scale = math.sqrt(m[k + "sq"])
        if abs(m[k]) > 1e-8 * scale:
            raise AssertionError(f"first moment <{k}> = {m[k]:.3g} is not zero; grid is not symmetric")
    return _with_derived({k: m[k] for k in BASE_KEYS})


def quadrature_moments(params: OpoParams, grid: GridSpec | None = None, *,
                       estimate_error: bool = True) -> MomentSet:
    """Second moments by tensor-grid trapezoid integration.

    The error entries are ``|fine - coarse|`` against a grid with 3/4 of the
    nodes per axis, an upper bound since the rule converges geometrically
    for this integrand.
    """
    grid = default_grid(params) if grid is None else grid
    values = _grid_values(params, grid)
    errors = {}
    if estimate_error:
        coarse_points = max(16, 2 * ((3 * grid.points) // 8))
        coarse = GridSpec(grid.bound, coarse_points, grid.tail_epsilon)
        try:
            cvals = _grid_values(params, coarse)
            errors = {k: abs(values[k] - cvals[k]) for k in values}
        except Exception:  # noqa: BLE001  - the coarse grid is only an error probe
            errors = {k: math.nan for k in values}
    return MomentSet.from_values(values, errors, method="quadrature")


# importance sampling -------------------------------------------------------

_N_ROT = 128  # periodic trapezoid nodes for the ring-averaged proposal


class _Proposal:
    """Gaussian or counter-rotation-averaged Gaussian proposal density."""

    def __init__(self, params: OpoParams, scale: float = 1.0):
        self.params = params
        if params.mu <= 1.0:
            mu = min(params.mu, 0.95)
            # EPR order (x+, y+, x-, y-)
            var_epr = np.array([1 / (1 - mu), 1 / (1 + mu), 1 / (1 + mu), 1 / (1 - mu)])
            self.ring = False
            self.center = np.zeros(4)
            self.cov = from_epr(from_epr(np.diag(var_epr)).T)  # orthogonal change of basis
        else:
            self.ring = True
            self.center = _ridge_point(params)
            self.cov = _local_covariance(params, self.center)
            rho2 = float(self.center @ self.center)
            self.defensive_var = max(1.0, 0.5 * rho2)
        self.cov = self.cov * scale**2
        self.chol = np.linalg.cholesky(self.cov)
        self.prec = np.linalg.inv(self.cov)
        self.log_det = 2.0 * np.log(np.diag(self.chol)).sum()

    defensive = 0.05

    def _log_gauss(self, p, center):
        d = p - center
        q = np.einsum("...i,ij,...j->...", d, self.prec, d)
        return -0.5 * (q + self.log_det) - 2.0 * math.log(2 * math.pi)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, 4)) @ self.chol.T + self.center
        if not self.ring:
            return z
        theta = rng.uniform(0.0, 2.0 * math.pi, n)
        z = counter_rotate(z, theta)
        broad = rng.random(n) < self.defensive
        z[broad] = rng.standard_normal((int(broad.sum()), 4)) * math.sqrt(self.defensive_var)
        return z

    def log_density(self, p: np.ndarray) -> np.ndarray:
        if not self.ring:
            return self._log_gauss(p, self.center)
        thetas = 2.0 * math.pi * np.arange(_N_ROT) / _N_ROT
        out = np.empty(len(p))
        for start in range(0, len(p), 4096):
            chunk = p[start:start + 4096]
            rotated = counter_rotate(chunk[:, None, :], -thetas[None, :])
            lg = self._log_gauss(rotated, self.center)
            top = lg.max(axis=1)
            out[start:start + 4096] = top + np.log(np.exp(lg - top[:, None]).mean(axis=1))
        s2 = self.defensive_var
        log_broad = -0.5 * (p * p).sum(axis=1) / s2 - 2.0 * math.log(2 * math.pi * s2)
        return np.logaddexp(math.log1p(-self.defensive) + out, math.log(self.defensive) + log_broad)


def _ridge_point(params):
    """Maximum of the steady state on the symmetric line ``(t, 0, t, 0)``."""
    def neg(t):
        return -float(log_weight(np.array([t, 0.0, t, 0.0]), params))
    hi = 2.0 * params.x_star + 5.0
    res = minimize_scalar(neg, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-10})
    return np.array([res.x, 0.0, res.x, 0.0])


def _local_covariance(params, center, h=1e-4, floor=0.25):
    """Inverse negative Hessian of ``log_weight`` with eigenvalues floored.

    The ring direction is flat, so its curvature is replaced by ``floor``.
    """
    eye = np.eye(4) * h
    H = np.empty((4, 4))
    f0 = float(log_weight(center, params))
    for i in range(4):
        for j in range(4):
            if i == j:
                H[i, i] = (log_weight(center + eye[i], params) - 2 * f0
                           + log_weight(center - eye[i], params)) / h**2
            else:
                H[i, j] = (log_weight(center + eye[i] + eye[j], params)
                           - log_weight(center + eye[i] - eye[j], params)
                           - log_weight(center - eye[i] + eye[j], params)
                           + log_weight(center - eye[i] - eye[j], params)) / (4 * h * h)
    lam, vec = np.linalg.eigh(-0.5 * (H + H.T))
    lam = np.maximum(lam, floor)
    return (vec / lam) @ vec.T


def _moment_samples(z):
    x1, y1, x2, y2 = z.T
    base = {"x1sq": x1 * x1, "y1sq": y1 * y1, "x2sq": x2 * x2, "y2sq": y2 * y2,
            "x1x2": x1 * x2, "y1y2": y1 * y2}
    return _with_derived(base)


def importance_moments(params: OpoParams, n_samples: int = 200_000, seed: int = 0, *,
                       n_batches: int = 20, proposal_scale: float = 1.25,
                       min_ess_fraction: float = 0.01) -> MomentSet:
    """Second moments by self-normalized importance sampling.

    The proposal is a Gaussian at the origin below threshold and, above it,
    the two Gaussians at the symmetric ridge points averaged over the
    counter-rotation symmetry, plus a small broad component.  Batch ``b``
    draws from the generator seeded by ``(seed, b)``; errors are the spread
    of the batch estimates.
    """
    if n_samples < 10_000:
        raise ValueError(f"n_samples must be >= 1e4, got {n_samples}")
    if n_batches < 2:
        raise ValueError("need at least two batches for an error estimate")
    if params.g2 == 0 and params.mu >= 1:
        raise ValueError("the g2 = 0 distribution is not normalizable for mu >= 1")
    q = _Proposal(params, proposal_scale)
    sizes = [n_samples // n_batches + (b < n_samples % n_batches) for b in range(n_batches)]
    log_w, samples = [], []
    for b, size in enumerate(sizes):
        z = q.sample(generator(seed, b), size)
        log_w.append(log_weight(z, params) - q.log_density(z))
        samples.append(z)
    top = max(lw.max() for lw in log_w)
    weights = [np.exp(lw - top) for lw in log_w]
    w_all = np.concatenate(weights)
    ess = w_all.sum() ** 2 / (w_all @ w_all)
    if ess < min_ess_fraction * n_samples:
        raise EffectiveSampleTooSmall(
            f"effective sample size {ess:.1f} < {min_ess_fraction:g} * {n_samples}")
    per_batch = []
    pooled = None
    total_w = w_all.sum()
    for w, z in zip(weights, samples):
        h = _moment_samples(z)
        est = {k: float(w @ v) for k, v in h.items()}
        pooled = est if pooled is None else {k: pooled[k] + est[k] for k in est}
        per_batch.append({k: v / w.sum() for k, v in est.items()})
    values = {k: v / total_w for k, v in pooled.items()}
    errors = {k: float(np.std([pb[k] for pb in per_batch], ddof=1) / math.sqrt(n_batches))
              for k in values}
    m = MomentSet.from_values(values, errors, method="importance")
    m.n_eff = float(ess)
    return m


# diagnostics -------------------------------------------------------------


def linearized_moments(params: OpoParams) -> MomentSet:
    xp, xm, yp, ym = linearized.variances(params.mu, params.g2)
    return MomentSet.from_epr(xp, xm, yp, ym, method="linearized")


class DuanSimon(NamedTuple):
    value: float
    entangled: bool
    error: float = 0.0


def duan_simon(m: MomentSet) -> DuanSimon:
    """``S = <x-^2> + <y+^2>``; the state is certified entangled iff ``S < 2``."""
    s = m.exp_xmsq + m.exp_ypsq
    return DuanSimon(s, bool(s < 2.0), m.err("S"))


def mean_photon(m: MomentSet):
    """Mean photon numbers ``(<x^2> + <y^2> - 2) / 4`` of both modes.

    Small negative values from numerical noise are clamped to zero.
    """
    out = []
    for xsq, ysq in ((m.exp_x1sq, m.exp_y1sq), (m.exp_x2sq, m.exp_y2sq)):
        n = 0.25 * (xsq + ysq - 2.0)
        if n < 0:
            warnings.warn(f"negative mean photon number {n:.3g} clamped to 0", RuntimeWarning,
                          stacklevel=2)
            n = 0.0
        out.append(n)
    return tuple(out)


@dataclass
class SweepRow:
    mu: float
    method: str
    moments: MomentSet | None = None
    error: str | None = None


def variance_sweep(template: OpoParams, mu_list, method: str = "quadrature", *,
                   grid_points: int = 96, n_samples: int = 200_000, seed: int = 0,
                   cfg=None, model: str = "reduced", bound: float | None = None) -> list:
    """One :class:`SweepRow` per pump value; failures are captured per row.

    ``template`` supplies everything except ``mu``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    mu_list = list(mu_list)
    if not mu_list:
        raise ValueError("mu_list is empty")
    rows = []
    for mu in mu_list:
        try:
            params = OpoParams(float(mu), template.g2, template.gamma, template.gamma0_ratio)
            if method == "linearized":
                m = linearized_moments(params)
            elif method == "quadrature":
                grid = default_grid(params, grid_points)
                if bound is not None:
                    grid = GridSpec(bound, grid_points)
                m = quadrature_moments(params, grid)
            elif method == "importance":
                m = importance_moments(params, n_samples, seed)
            else:
                from .sde import simulate_ensemble

                m = simulate_ensemble(params, cfg, model=model)
            rows.append(SweepRow(float(mu), method, m))
        except Exception as exc:  # noqa: BLE001  - recorded per row by contract
            rows.append(SweepRow(float(mu), method, None, f"{type(exc).__name__}: {exc}"))
    return rows
