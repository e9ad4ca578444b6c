import functools

import pytest

from wigner_opo.model import OpoParams
from wigner_opo.moments import quadrature_moments
from wigner_opo.sde import simulate_ensemble

ACCEPTANCE_LINES = {}


@functools.lru_cache(maxsize=None)
def quadrature(mu, g2=0.01):
    """Quadrature moments on the default 96-point grid, computed once per session."""
    return quadrature_moments(OpoParams(mu, g2))


@functools.lru_cache(maxsize=None)
def ensemble(mu, model="reduced", g2=0.01):
    """Default-configuration SDE ensemble, computed once per session."""
    return simulate_ensemble(OpoParams(mu, g2), model=model)


@pytest.fixture
def sde_default():
    return ensemble


@pytest.fixture
def quad():
    return quadrature


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
