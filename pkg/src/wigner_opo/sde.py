"""Euler-Maruyama ensembles of the truncated-Wigner equations.

Two models are integrated.  ``"reduced"`` is the two-mode Ito equation
``dX = A dt + B dW`` with six real noises; ``"full"`` keeps the pump as a
dynamical mode and uses additive complex noise on all three amplitudes.

Every trajectory owns a generator derived from ``(seed, index)`` and draws its
noise in fixed-size chunks, so per-trajectory results do not depend on how
trajectories are batched, ordered, or spread over threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from ._parallel import derive_trajectory_seed, generator, ordered_map
from .model import OpoParams, three_mode_drift
from .moments import BASE_KEYS, MomentSet

__all__ = [
    "NonFinite",
    "UnconvergedWarning",
    "IntegratorConfig",
    "EnsembleMoments",
    "em_step_reduced",
    "em_step_full",
    "derive_trajectory_seed",
    "trajectory_averages",
    "simulate_ensemble",
    "stability_limit",
]

MODELS = ("reduced", "full")
_CHUNK = 512  # noise draws per generator call
_BATCH = 256  # trajectories advanced together


class NonFinite(FloatingPointError):
    """An integration step produced inf/nan (usually dt too large)."""


class UnconvergedWarning(RuntimeWarning):
    """Burn-in shorter than five linear relaxation times."""


def stability_limit(params: OpoParams, model: str) -> float:
    """Largest admissible step in units of ``1/gamma``."""
    return 0.1 / max(1.0, params.gamma0_ratio) if model == "full" else 0.1


def default_burn_in(mu: float) -> float:
    if 0.9 <= mu <= 1.1:
        return 50.0
    return max(20.0, min(50.0, 5.0 / abs(1.0 - mu)))


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size and run lengths, all in units of ``1/gamma``."""

    dt: float = 2e-3
    t_burn: float = 20.0
    t_total: float = 200.0
    n_traj: int = 200
    seed: int = 0
    stride: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not 0 <= self.t_burn < self.t_total:
            raise ValueError("need 0 <= t_burn < t_total")
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.stride >= self.dt:
            raise ValueError("stride must be at least one step")

    @classmethod
    def default(cls, params: OpoParams, model: str = "reduced", **overrides):
        dt = stability_limit(params, model) if model == "full" else 2e-3
        base = cls(dt=dt, t_burn=default_burn_in(params.mu))
        return replace(base, **overrides)


@dataclass
class EnsembleMoments(MomentSet):
    """Ensemble and time averaged moments; ``n_eff`` counts recorded samples."""

    n_traj: int = 0


def _reduced_update(x1, y1, x2, y2, w, params: OpoParams, dt: float):
    """One Ito-Euler step of the reduced model on component arrays."""
    gam, mu, h = params.gamma, params.mu, 0.5 * params.g2
    c = params.g / math.sqrt(2.0)
    sq = math.sqrt(2.0 * gam * dt)
    r1 = x1 * x1 + y1 * y1
    r2 = x2 * x2 + y2 * y2
    w0, w1, w2, w3, w4, w5 = w
    gdt = gam * dt
    nx1 = x1 + gdt * (-x1 + mu * x2 - h * x1 * r2) + sq * (w0 + c * (x2 * w4 + y2 * w5))
    ny1 = y1 + gdt * (-y1 - mu * y2 - h * y1 * r2) + sq * (w1 + c * (x2 * w5 - y2 * w4))
    nx2 = x2 + gdt * (-x2 + mu * x1 - h * x2 * r1) + sq * (w2 + c * (x1 * w4 + y1 * w5))
    ny2 = y2 + gdt * (-y2 - mu * y1 - h * y2 * r1) + sq * (w3 + c * (x1 * w5 - y1 * w4))
    return nx1, ny1, nx2, ny2


def _full_update(a0, a1, a2, w, params: OpoParams, E: float, dt: float):
    g, g0, chi = params.gamma, params.gamma0, params.chi
    s0 = math.sqrt(0.5 * g0 * dt)
    s = math.sqrt(0.5 * g * dt)
    w0a, w0b, w1a, w1b, w2a, w2b = w
    n0 = a0 + dt * (-g0 * a0 + E - chi * a1 * a2) + s0 * (w0a + 1j * w0b)
    n1 = a1 + dt * (-g * a1 + chi * a0 * np.conj(a2)) + s * (w1a + 1j * w1b)
    n2 = a2 + dt * (-g * a2 + chi * a0 * np.conj(a1)) + s * (w2a + 1j * w2b)
    return n0, n1, n2


def em_step_reduced(p, params: OpoParams, dt: float, w) -> np.ndarray:
    """``p + A(p) dt + B(p) w sqrt(dt)`` for standard normal ``w`` (last axis 6).

    ``dt`` is in physical time units.
    """
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.stack(_reduced_update(*np.moveaxis(p, -1, 0), np.moveaxis(w, -1, 0), params, dt), -1)
    if not np.all(np.isfinite(out)):
        raise NonFinite(f"non-finite state after reduced step with dt={dt:g}")
    return out


def em_step_full(s, params: OpoParams, E, dt: float, w) -> np.ndarray:
    """Euler-Maruyama step of the three-mode equations.

    Mode ``j`` gets noise ``sqrt(gamma_j) (w_a + i w_b) / sqrt(2)``, so each of
    its quadratures diffuses like the reduced model at the origin.
    """
    s = np.asarray(s, dtype=complex)
    w = np.asarray(w, dtype=float)
    E = params.pump if E is None else E
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.stack(_full_update(*np.moveaxis(s, -1, 0), np.moveaxis(w, -1, 0), params, E, dt), -1)
    if not np.all(np.isfinite(out)):
        raise NonFinite(f"non-finite state after full step with dt={dt:g}")
    return out


def _run_batch(params: OpoParams, cfg: IntegratorConfig, model: str, indices):
    """Time averages of the base monomials for the given trajectory indices."""
    b = len(indices)
    gens = [generator(cfg.seed, int(k)) for k in indices]
    dt = cfg.dt / params.gamma
    n_steps = int(round(cfg.t_total / cfg.dt))
    n_burn = int(round(cfg.t_burn / cfg.dt))
    stride = max(1, int(round(cfg.stride / cfg.dt)))
    if model == "reduced":
        state = [np.zeros(b) for _ in range(4)]
    else:
        E = params.pump
        state = [np.full(b, E / params.gamma0, dtype=complex),
                 np.zeros(b, dtype=complex), np.zeros(b, dtype=complex)]
    sums = np.zeros((6, b))
    n_rec = 0
    step = 0
    # overflow shows up as inf/nan and is reported per chunk below
    with np.errstate(over="ignore", invalid="ignore"):
        while step < n_steps:
            m = min(_CHUNK, n_steps - step)
            noise = np.stack([g.standard_normal((_CHUNK, 6)) for g in gens], axis=1)
            for i in range(m):
                w = noise[i].T
                if model == "reduced":
                    state = _reduced_update(*state, w, params, dt)
                else:
                    state = _full_update(*state, w, params, E, dt)
                step += 1
                if step > n_burn and (step - n_burn) % stride == 0:
                    if model == "reduced":
                        x1, y1, x2, y2 = state
                    else:
                        a1, a2 = state[1], state[2]
                        x1, y1, x2, y2 = 2 * a1.real, 2 * a1.imag, 2 * a2.real, 2 * a2.imag
                    sums[0] += x1 * x1
                    sums[1] += y1 * y1
                    sums[2] += x2 * x2
                    sums[3] += y2 * y2
                    sums[4] += x1 * x2
                    sums[5] += y1 * y2
                    n_rec += 1
            bad = ~np.all([np.isfinite(c) for c in state], axis=0)
            if bad.any():
                k = int(np.asarray(indices)[np.argmax(bad)])
                raise NonFinite(f"trajectory {k} left the finite range by t={step * cfg.dt:g}/gamma "
                                f"(dt={cfg.dt:g}); reduce dt")
    if n_rec == 0:
        raise ValueError("no samples recorded after burn-in; increase t_total")
    return sums / n_rec, n_rec


def _check(params, cfg, model):
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
    limit = stability_limit(params, model)
    if cfg.dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={cfg.dt:g} exceeds the stability limit {limit:g} for the {model} model")


def trajectory_averages(params: OpoParams, cfg: IntegratorConfig, indices,
                        model: str = "reduced") -> np.ndarray:
    """Per-trajectory time averages, shape ``(len(indices), 6)`` in BASE_KEYS order."""
    _check(params, cfg, model)
    indices = list(indices)
    batches = [indices[i:i + _BATCH] for i in range(0, len(indices), _BATCH)]
    results = ordered_map(lambda idx: _run_batch(params, cfg, model, idx)[0], batches)
    return np.concatenate([r.T for r in results], axis=0)


def simulate_ensemble(params: OpoParams, cfg: IntegratorConfig | None = None,
                      model: str = "reduced") -> EnsembleMoments:
    """Stationary second moments from an ensemble of trajectories.

    Each trajectory starts at the noiseless vacuum, is integrated for
    ``cfg.t_total`` and sampled every ``cfg.stride`` after ``cfg.t_burn``.
    Estimates are means over trajectories of the time averages; errors are
    the between-trajectory standard errors.
    """
    cfg = IntegratorConfig.default(params, model) if cfg is None else cfg
    _check(params, cfg, model)
    if params.mu < 1 and cfg.t_burn < 5.0 / (1.0 - params.mu):
        warnings.warn(f"burn-in {cfg.t_burn:g}/gamma is shorter than 5 relaxation times "
                      f"({5.0 / (1.0 - params.mu):g}/gamma)", UnconvergedWarning, stacklevel=2)
    per_traj = trajectory_averages(params, cfg, range(cfg.n_traj), model)
    base = dict(zip(BASE_KEYS, per_traj.T))
    sx = 0.5 * (base["x1sq"] + base["x2sq"])
    sy = 0.5 * (base["y1sq"] + base["y2sq"])
    derived = {"xpsq": sx + base["x1x2"], "xmsq": sx - base["x1x2"],
               "ypsq": sy + base["y1y2"], "ymsq": sy - base["y1y2"]}
    derived["S"] = derived["xmsq"] + derived["ypsq"]
    columns = {**base, **derived}
    values = {k: float(np.mean(v)) for k, v in columns.items()}
    n = cfg.n_traj
    errors = {k: float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else math.nan
              for k, v in columns.items()}
    n_steps = int(round(cfg.t_total / cfg.dt))
    n_burn = int(round(cfg.t_burn / cfg.dt))
    stride = max(1, int(round(cfg.stride / cfg.dt)))
    n_rec = (n_steps - n_burn) // stride
    return EnsembleMoments(*(values[k] for k in BASE_KEYS), error=errors,
                           method=f"sde-{model}", n_eff=float(n_rec * n), n_traj=n)

