import numpy as np
import pytest

from qesurf.chart import ChartGrid
from qesurf.hitchin import ThetaField, theta_structure
from qesurf.qee import QEStructure


def half_plane(n=65, precision="double", order=8):
    return ChartGrid((0.0, 1.0), (1.0, 2.0), n, n, order=order, precision=precision)


def flat(grid):
    """g = dx² + dy², X♭ = dy/y."""
    return QEStructure.conformal(grid, np.full(grid.shape, -np.log(2.0)), -0.5j / grid.Y)


def hyperbolic(grid):
    """g = (dx² + dy²)/y², X♭ = −dy/y."""
    return QEStructure.conformal(grid, -np.log(2.0) - 2 * np.log(grid.Y), 0.5j / grid.Y)


def sphere_H(grid):
    return np.log(2.0) - 2.0 * np.log1p(np.abs(grid.z) ** 2)


@pytest.fixture(scope="session")
def grid65():
    return half_plane(65)


@pytest.fixture(scope="session")
def flat65(grid65):
    return flat(grid65)


@pytest.fixture(scope="session")
def hyp65(grid65):
    return hyperbolic(grid65)


@pytest.fixture(scope="session")
def theta_flat65(grid65):
    return theta_structure(ThetaField(grid65, np.full(grid65.shape, np.pi / 2)))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
