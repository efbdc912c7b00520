import numpy as np
import pytest

from chcross.fem import operators
from chcross.initial_data import TWO_PI_SQUARE, exp1_c, exp1_phi
from chcross.mesh import build_rect_mesh, interpolate_nodal
from chcross.stepper import initial_state


@pytest.fixture
def unit_mesh():
    return build_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, 1)


@pytest.fixture
def periodic_box():
    def make(n):
        return build_rect_mesh(*TWO_PI_SQUARE, n, n)

    return make


@pytest.fixture
def exp1_state():
    def make(mesh):
        return initial_state(interpolate_nodal(mesh, exp1_phi), interpolate_nodal(mesh, exp1_c))

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


@pytest.fixture(autouse=True)
def _clear_operator_cache():
    yield
    operators.cache_clear()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
