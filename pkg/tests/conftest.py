import numpy as np
import pytest

from magnonic.model import derive_params, reference_params
from magnonic.operators import make_layout


@pytest.fixture(scope="session")
def ref():
    p = reference_params()
    return p, derive_params(p)


@pytest.fixture(scope="session")
def layout4():
    return make_layout(4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_density(rng, dim, rank=None):
    """Random full-rank (or given rank) density matrix."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
