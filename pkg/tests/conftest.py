import numpy as np
import pytest

from relaxlab.model import FluxSpec, IsothermSpec, ModelSpec

_CRITERION_LINES = []


def record_criterion(line: str):
    _CRITERION_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(params=["linear", "langmuir"])
def isotherm(request):
    if request.param == "linear":
        return IsothermSpec(kind="linear")
    return IsothermSpec(kind="langmuir", beta=1.0)


@pytest.fixture(params=["linear", "quadratic"])
def flux(request):
    if request.param == "linear":
        return FluxSpec(kind="linear", c=1.0)
    return FluxSpec(kind="quadratic")


@pytest.fixture
def model(flux, isotherm):
    return ModelSpec(flux, isotherm)
