import numpy as np
import pytest

from slabrt import CorrelationModel, InitialPulse, MediumSpec, SlabConfig, TallyLayout
from slabrt.transport import Problem


@pytest.fixture(scope="session")
def gauss():
    return MediumSpec(1.0, CorrelationModel("gaussian", 1.0, 1.0))


@pytest.fixture(scope="session")
def expo():
    return MediumSpec(1.0, CorrelationModel("exponential", 1.0, 1.0))


@pytest.fixture(scope="session")
def pulse_k3():
    # |K| around 3: Σ of order one, several reflections before T
    return InitialPulse("gaussian", "gaussian", 2.0, 1.0, 1.0, 3.0)


@pytest.fixture(scope="session")
def small_layout():
    return TallyLayout(np.linspace(0.0, 4.0, 9), [0.0, 0.5, 1.0, 2.0, 4.0001], np.linspace(0.0, 1.0, 11),
                       np.linspace(-1.0, 1.0, 5), np.linspace(0.0, 8.0, 7), np.linspace(0.0, 8.0, 31),
                       census_times=(0.5, 1.0, 2.0))


@pytest.fixture(scope="session")
def small_problem(gauss, pulse_k3, small_layout):
    slab = SlabConfig(1.0, "neumann-neumann", (0.0, 0.0, 0.4))
    return Problem.build(gauss, pulse_k3, slab, small_layout)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
