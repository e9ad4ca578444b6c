import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wigner_opo.linearized import (
    DomainError, gaussian_logweight, variances, variances_above, variances_below,
)


def test_below_threshold_values():
    assert variances_below(0.5) == (2.0, 2 / 3, 2 / 3, 2.0)
    assert variances_below(0.0) == (1.0, 1.0, 1.0, 1.0)


def test_above_threshold_values():
    assert variances_above(1.5, 0.01) == (52.0, 0.5, 0.5, 52.0)


def test_domain_errors():
    for bad in (1.0, 1.2, -0.1):
        with pytest.raises(DomainError):
            variances_below(bad)
    for bad in (1.0, 0.5):
        with pytest.raises(DomainError):
            variances_above(bad, 0.01)
    with pytest.raises(DomainError):
        variances_above(1.5, 0.0)
    with pytest.raises(DomainError):
        variances(1.0, 0.01)
    assert issubclass(DomainError, ValueError)


@given(st.floats(0, 0.999))
def test_below_product_and_divergence(mu):
    xp, xm, yp, ym = variances_below(mu)
    assert xp == ym and xm == yp
    assert xp * xm == pytest.approx(1 / (1 - mu * mu))
    assert xm >= 0.5


def test_divergence_toward_threshold():
    vals = [variances(mu, 0.01)[0] for mu in (0.9, 0.99, 0.999, 1.001, 1.01, 1.1)]
    assert vals[2] > vals[1] > vals[0]
    assert vals[3] > vals[4]
    assert vals[2] > 500 and vals[3] > 500


def test_gaussian_logweight():
    e = np.array([1.0, 0.0, 0.0, 0.0])
    assert gaussian_logweight(e, 0.5) == pytest.approx(-0.25)
    assert gaussian_logweight(e, 1.5) == pytest.approx(0.25)  # not normalizable
    with pytest.raises(DomainError):
        gaussian_logweight(e, 1.5, normalizable=True)
