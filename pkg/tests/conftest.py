import numpy as np
import pytest

from mtnls.functionals import ModelParams
from mtnls.spectral import make_basis

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture(params=["torus-fourier", "dirichlet-sine"])
def basis(request):
    return make_basis(request.param, 6, 2)


@pytest.fixture
def torus8():
    return make_basis("torus-fourier", 8, 2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
