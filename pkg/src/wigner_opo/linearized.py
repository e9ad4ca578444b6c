"""Linearized-fluctuation baseline for the EPR variances.

Tuples are ordered ``(<x+^2>, <x-^2>, <y+^2>, <y-^2>)``.
"""

import numpy as np

from .model import _split

__all__ = ["DomainError", "variances_below", "variances_above", "variances",
           "gaussian_logweight"]


class DomainError(ValueError):
    """Pump value outside the regime where the formula applies."""


def variances_below(mu):
    if not 0 <= mu < 1:
        raise DomainError(f"below-threshold variances need 0 <= mu < 1, got {mu}")
    anti = 1.0 / (1.0 - mu)
    sq = 1.0 / (1.0 + mu)
    return anti, sq, sq, anti


def variances_above(mu, g2):
    if not mu > 1:
        raise DomainError(f"above-threshold variances need mu > 1, got {mu}")
    if not g2 > 0:
        raise DomainError(f"g2 must be > 0, got {g2}")
    anti = 1.0 / (mu - 1.0) + (mu - 1.0) / g2
    return anti, 0.5, 0.5, anti


def variances(mu, g2):
    """Either branch; raises :class:`DomainError` exactly at threshold."""
    return variances_below(mu) if mu < 1 else variances_above(mu, g2)


def gaussian_logweight(e, mu, *, normalizable=False):
    """Quadratic exponent of the Gaussian (g -> 0) approximation.

    ``e`` has a last axis ``(x+, y+, x-, y-)``.  The form exists for any
    ``mu``; pass ``normalizable=True`` to insist on ``mu < 1``.
    """
    if normalizable and not 0 <= mu < 1:
        raise DomainError(f"the Gaussian approximation is normalizable only for mu < 1, got {mu}")
    xp, yp, xm, ym = _split(e)
    return -0.5 * ((1 + mu) * (xm * xm + yp * yp) + (1 - mu) * (xp * xp + ym * ym))
