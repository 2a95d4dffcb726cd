import sys

import pytest

from conic_ch.discrete import Discretization, build_grid
from conic_ch.geometry import build_spindle


def make_disc(alpha0=1.0, alphaL=1.0, L=2.0, x_c=0.5, N=32, n_theta=8, x_min=1e-3,
              grading="log-collar"):
    g = build_spindle(alpha0, alphaL, L, x_c)
    return Discretization(g, build_grid(g, N, x_min, grading), n_theta)


@pytest.fixture(scope="session")
def disc():
    return make_disc()


@pytest.fixture(scope="session")
def disc08():
    return make_disc(0.8, 0.8, 2.0, 0.5, N=48, n_theta=8)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
        terminalreporter.write_line(line)
