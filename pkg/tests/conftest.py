import numpy as np
import pytest

from battmon import harness
from battmon.battery import BatteryParams
from tests.oracles import LinearSystem

DEFAULT_PARAMS = BatteryParams(r_e=0.01, r_c=0.015, r_t=0.005, c_b=10.0, c_c=1.0, t_s=0.01)


@pytest.fixture
def params():
    return DEFAULT_PARAMS


@pytest.fixture(scope="session")
def default_cfg():
    return harness.HarnessConfig.from_dict(harness.load_config())


@pytest.fixture
def linear_system():
    """A stable, coupled 4-state system observed through its first two states."""
    a = np.array([
        [0.95, 0.04, 0.01, 0.0],
        [0.02, 0.90, 0.0, 0.03],
        [0.0, 0.0, 0.99, 0.01],
        [0.01, 0.0, -0.02, 0.97],
    ])
    b = np.array([[0.1], [0.0], [0.02], [0.05]])
    c = np.hstack([np.eye(2), np.zeros((2, 2))])
    return LinearSystem(a=a, b=b, c=c, q=0.01 * np.eye(4), r=np.diag([0.2, 0.1]))


def linear_run(sys, n_steps, seed):
    """Inputs and measurements for ``n_steps``; the first step has no input."""
    rng = np.random.Generator(np.random.PCG64(seed))
    x = np.ones(4)
    us, zs = [None], []
    for k in range(n_steps):
        if k:
            u = np.sin(0.05 * k)
            x = sys.a @ x + sys.b[:, 0] * u + 0.1 * rng.standard_normal(4)
            us.append(u)
        zs.append(sys.c @ x + 0.3 * rng.standard_normal(2))
    return us, zs


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
