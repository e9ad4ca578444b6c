"""Closed-form steady-state Wigner distribution of the reduced OPO model.

The distribution is only known up to its normalization, so everything here
works with ``log_weight`` and reduces tensor-grid sums in log-sum-exp form:
above threshold the exponent reaches O(10^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from ._parallel import ordered_map
from .model import OpoParams, _split, diffusion, drift

__all__ = [
    "TailTooHeavy",
    "DegenerateField",
    "GridSpec",
    "NormalizedWigner",
    "Field2D",
    "Peaks",
    "default_grid",
    "log_weight",
    "normalize",
    "wigner",
    "log_marginal",
    "marginal",
    "marginal_consistency",
    "conditional_slice",
    "count_peaks",
    "stationarity_residual",
    "grid_reduce",
]


class TailTooHeavy(RuntimeError):
    """The truncated box cuts off more than the allowed probability mass."""


class DegenerateField(ValueError):
    """Peak search on a field without any structure."""


@dataclass(frozen=True)
class GridSpec:
    """Symmetric tensor grid ``linspace(-bound, bound, points)`` per axis.

    ``tail_epsilon`` is the largest mass fraction tolerated on the outermost
    shell of nodes before a reduction raises :class:`TailTooHeavy`.
    """

    bound: float
    points: int = 96
    tail_epsilon: float = 1e-7

    def __post_init__(self):
        if not (self.bound > 0 and math.isfinite(self.bound)):
            raise ValueError(f"bound must be positive and finite, got {self.bound}")
        if self.points < 16 or self.points % 2:
            raise ValueError(f"points must be even and >= 16, got {self.points}")
        if not 0 < self.tail_epsilon < 1:
            raise ValueError(f"tail_epsilon must lie in (0, 1), got {self.tail_epsilon}")

    def nodes(self) -> np.ndarray:
        return np.linspace(-self.bound, self.bound, self.points)

    def weights(self) -> np.ndarray:
        w = np.full(self.points, 2.0 * self.bound / (self.points - 1))
        w[0] = w[-1] = 0.5 * w[0]
        return w

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.bound, self.points * factor, self.tail_epsilon)


@dataclass(frozen=True)
class NormalizedWigner:
    params: OpoParams
    log_norm: float
    grid: GridSpec


class Field2D(NamedTuple):
    """Values on the tensor grid ``xs x ys`` (``values[i, j]`` at ``xs[i], ys[j]``)."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray


class Peaks(NamedTuple):
    count: int
    coords: np.ndarray  # (count, 2), sorted by descending height


def default_grid(params: OpoParams, points: int = 96) -> GridSpec:
    """Box covering the Gaussian bulk and the above-threshold peaks."""
    if params.g2 == 0 and params.mu >= 1:
        raise ValueError("the g2 = 0 distribution is not normalizable for mu >= 1")
    mu_lin = min(params.mu, 0.95)
    sigma_lin = math.sqrt(1.0 / (1.0 - mu_lin))
    return GridSpec(max(6.0, 1.5 * params.x_star + 6.0 * sigma_lin), points)


def _log_weight(x1, y1, x2, y2, mu, g2):
    r1 = x1 * x1 + y1 * y1
    r2 = x2 * x2 + y2 * y2
    r = r1 + r2
    num = (1.0 + g2) * r + 2.0 * mu * (y1 * y2 - x1 * x2) + g2 * r1 * r2
    return -0.5 * num / (1.0 + 0.5 * g2 * r)


def log_weight(p, params: OpoParams) -> np.ndarray:
    """Exponent of the unnormalized steady-state Wigner distribution."""
    x1, y1, x2, y2 = _split(p)
    return _log_weight(x1, y1, x2, y2, params.mu, params.g2)


class GridSums(NamedTuple):
    log_mass: float
    shell_fraction: float
    moments: dict  # expectation values of the monomials listed in _MONOMIALS


_MONOMIALS = ("x1", "y1", "x2", "y2", "x1sq", "y1sq", "x2sq", "y2sq", "x1x2", "y1y2")


def grid_reduce(params: OpoParams, grid: GridSpec, *, check_tail: bool = True) -> GridSums:
    """Trapezoid sums of ``exp(log_weight)`` and its low monomials.

    The integrand is evaluated one ``x1`` hyper-row at a time (``points**3``
    nodes each); rows run on the thread pool and are merged in index order,
    so the result does not depend on the worker count.
    """
    x = grid.nodes()
    w = grid.weights()
    n = grid.points
    mu, g2 = params.mu, params.g2
    Y1 = x[:, None, None]
    X2 = x[None, :, None]
    Y2 = x[None, None, :]
    W3 = w[:, None, None] * w[None, :, None] * w[None, None, :]

    def row(k):
        L = _log_weight(x[k], Y1, X2, Y2, mu, g2)
        m = L.max()
        e = np.exp(L - m)
        e *= W3
        e *= w[k]
        total = e.sum()
        if k in (0, n - 1):
            shell = total
        else:
            shell = total - e[1:-1, 1:-1, 1:-1].sum()
        m_y1 = e.sum(axis=(1, 2))
        m_x2 = e.sum(axis=(0, 2))
        m_y2 = e.sum(axis=(0, 1))
        e_y1y2 = e.sum(axis=1)
        xk = x[k]
        sums = np.array(
            [
                total,
                xk * total,
                m_y1 @ x,
                m_x2 @ x,
                m_y2 @ x,
                xk * xk * total,
                m_y1 @ (x * x),
                m_x2 @ (x * x),
                m_y2 @ (x * x),
                xk * (m_x2 @ x),
                x @ e_y1y2 @ x,
                shell,
            ]
        )
        return m, sums

    results = ordered_map(row, range(n))
    peaks = np.array([r[0] for r in results])
    top = peaks.max()
    scale = np.exp(peaks - top)
    acc = np.zeros(12)
    for s, (_, sums) in zip(scale, results):
        acc += s * sums
    total = acc[0]
    shell_fraction = acc[-1] / total
    if check_tail and shell_fraction > grid.tail_epsilon:
        raise TailTooHeavy(
            f"outer shell holds {shell_fraction:.3g} of the mass (> {grid.tail_epsilon:g}); "
            f"increase bound={grid.bound:g} (mu={params.mu:g}, g2={params.g2:g})"
        )
    moments = dict(zip(_MONOMIALS, acc[1:-1] / total))
    return GridSums(top + math.log(total), float(shell_fraction), moments)


def normalize(params: OpoParams, grid: GridSpec | None = None) -> NormalizedWigner:
    """Normalization constant of the steady state on a truncated box."""
    grid = default_grid(params) if grid is None else grid
    sums = grid_reduce(params, grid)
    return NormalizedWigner(params, -sums.log_mass, grid)


def wigner(p, nw: NormalizedWigner) -> np.ndarray:
    return np.exp(log_weight(p, nw.params) + nw.log_norm)


def log_marginal(x2, y2, params: OpoParams, log_norm: float = 0.0) -> np.ndarray:
    """Log of the closed-form single-mode marginal, prefactor ``2 pi N``."""
    u = np.asarray(x2, dtype=float) ** 2 + np.asarray(y2, dtype=float) ** 2
    g2, mu = params.g2, params.mu
    expo = -u * (1.0 + g2 * (1.0 + u) - mu * mu) / (2.0 * (1.0 + g2 * u) ** 2)
    return math.log(2.0 * math.pi) + log_norm + expo


def marginal(x2, y2, params: OpoParams, log_norm: float = 0.0) -> np.ndarray:
    """Closed-form marginal of mode 2; depends on ``x2**2 + y2**2`` only.

    With the default ``log_norm=0`` the value is relative to ``2 pi N``.
    """
    return np.exp(log_marginal(x2, y2, params, log_norm))


def marginal_consistency(params: OpoParams, grid: GridSpec | None = None, probes=None,
                         floor: float = 1e-6) -> float:
    """Worst relative gap between integrated and closed-form marginals.

    The joint distribution is normalized on ``grid`` and integrated over
    ``(x1, y1)`` with the same trapezoid rule.  ``probes`` is an ``(m, 2)``
    array of ``(x2, y2)``; by default a radial fan inside the box.  Probes
    where the closed form is below ``floor`` times its maximum are skipped.
    """
    grid = default_grid(params) if grid is None else grid
    nw = normalize(params, grid)
    if probes is None:
        radii = np.linspace(0.0, 0.8 * grid.bound, 41)
        angles = np.array([0.0, 0.3, 0.25 * math.pi, 1.1])
        probes = np.array([(r * math.cos(a), r * math.sin(a)) for r in radii for a in angles])
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    closed = log_marginal(probes[:, 0], probes[:, 1], params, nw.log_norm)
    r_dense = np.linspace(0.0, grid.bound, 4001)
    peak = log_marginal(r_dense, 0.0, params, nw.log_norm).max()
    keep = closed > peak + math.log(floor)
    x = grid.nodes()
    w = grid.weights()
    W2 = w[:, None] * w[None, :]
    worst = 0.0
    for (u, v), ref in zip(probes[keep], closed[keep]):
        L = _log_weight(x[:, None], x[None, :], u, v, params.mu, params.g2) + nw.log_norm
        m = L.max()
        log_num = m + math.log((W2 * np.exp(L - m)).sum())
        worst = max(worst, abs(math.expm1(log_num - ref)))
    return worst


def conditional_slice(params: OpoParams, y1: float = 0.0, y2: float = 0.0,
                      grid: GridSpec | None = None) -> Field2D:
    """Unnormalized ``W(x1, y1, x2, y2)`` on the ``(x1, x2)`` grid.

    Values are relative to the slice maximum (which is therefore 1).
    """
    grid = default_grid(params, points=400) if grid is None else grid
    x = grid.nodes()
    L = _log_weight(x[:, None], y1, x[None, :], y2, params.mu, params.g2)
    return Field2D(x, x.copy(), np.exp(L - L.max()))


def count_peaks(field, xs=None, ys=None, rel_height: float = 1e-3) -> Peaks:
    """Interior local maxima of a 2-D field (8-neighbour, plateau aware).

    A maximum is a connected set of equal-valued nodes whose 8-neighbours
    are all strictly lower; it counts if its height is at least
    ``rel_height`` times the global maximum and it does not touch the edge.
    Coordinates are plateau centroids.
    """
    if isinstance(field, Field2D):
        xs, ys, field = field
    values = np.asarray(field, dtype=float)
    if values.ndim != 2:
        raise ValueError("count_peaks needs a 2-D field")
    if xs is None:
        xs = np.arange(values.shape[0], dtype=float)
    if ys is None:
        ys = np.arange(values.shape[1], dtype=float)
    top = values.max()
    if top == values.min():
        raise DegenerateField("field is constant")
    candidate = ndimage.maximum_filter(values, size=3, mode="nearest") == values
    labels, n = ndimage.label(candidate, structure=np.ones((3, 3)))
    found = []
    for lab in range(1, n + 1):
        region = labels == lab
        height = values[region].max()
        if height < rel_height * top:
            continue
        idx = np.argwhere(region)
        if idx.min() == 0 or idx[:, 0].max() == values.shape[0] - 1 or idx[:, 1].max() == values.shape[1] - 1:
            continue
        if np.any(values[region] != height):
            continue
        ring = ndimage.binary_dilation(region, structure=np.ones((3, 3))) & ~region
        if np.any(values[ring] >= height):
            continue
        ci, cj = idx.mean(axis=0)
        found.append((height, np.interp(ci, np.arange(len(xs)), xs), np.interp(cj, np.arange(len(ys)), ys)))
    found.sort(key=lambda t: -t[0])
    coords = np.array([(a, b) for _, a, b in found]).reshape(-1, 2)
    return Peaks(len(found), coords)


def stationarity_residual(p, params: OpoParams, h: float | None = None) -> float:
    """Fokker-Planck operator applied to the steady state, over ``gamma W(p)``.

    Uses central differences of ``A_i W`` and ``D_ij W`` with step ``h``
    (default ``1e-3 (1 + |p|)``).
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (4,):
        raise ValueError("stationarity_residual takes a single point")
    if h is None:
        h = 1e-3 * (1.0 + float(np.linalg.norm(p)))
    L0 = float(log_weight(p, params))

    def f(q):
        return np.exp(log_weight(q, params) - L0)

    eye = np.eye(4) * h
    total = 0.0
    # first-order part
    q = np.concatenate([p + eye, p - eye])
    Af = drift(q, params) * f(q)[:, None]
    total -= sum((Af[i, i] - Af[4 + i, i]) / (2 * h) for i in range(4))
    # second-order part, 0.5 * d_i d_j (D_ij f)
    Dc = diffusion(p, params)
    Dq = diffusion(q, params) * f(q)[:, None, None]
    for i in range(4):
        total += 0.5 * (Dq[i, i, i] - 2 * Dc[i, i] + Dq[4 + i, i, i]) / h**2
    for i in range(4):
        for j in range(i + 1, 4):
            corners = np.array([p + eye[i] + eye[j], p + eye[i] - eye[j],
                                p - eye[i] + eye[j], p - eye[i] - eye[j]])
            G = diffusion(corners, params)[:, i, j] * f(corners)
            # both (i, j) and (j, i) terms
            total += (G[0] - G[1] - G[2] + G[3]) / (4 * h * h)
    return total / params.gamma
