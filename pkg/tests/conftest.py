import numpy as np
import pytest
from hypothesis import settings

from isomono import INF, FuchsianSystem

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


def traceless(rng, lam, scale=0.3):
    """Random traceless matrix with eigenvalues +-lam."""
    g = np.eye(2) + scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return g @ np.diag([lam, -lam]) @ np.linalg.inv(g)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def diagonal_system():
    """Commuting system: diagonal residues at 0, 1, 1j and infinity."""
    lam = [0.2, 0.15, 0.1]
    res = [np.diag([l, -l]) for l in lam]
    return FuchsianSystem.from_finite([0, 1, 1j, INF], res, lam + [0.45])
