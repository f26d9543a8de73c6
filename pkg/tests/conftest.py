import time

import pytest

from kepler_sphere.dynamics import KeplerParams
from kepler_sphere.geometry import Tolerances, fixture_c1
from kepler_sphere.suites import run_orbit_battery, sample_orbit_elements

# criterion number -> (passed, one-line detail); filled by test_acceptance,
# printed as a summary block at the end of the run
ACCEPTANCE_LINES = {}


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE_LINES[number] = (passed, detail)


@pytest.fixture(scope="session")
def params():
    return KeplerParams(gamma=1.0)


@pytest.fixture(scope="session")
def tol():
    return Tolerances()


@pytest.fixture
def c1():
    return fixture_c1()


@pytest.fixture(scope="session")
def acceptance_battery(params):
    """FixtureC1 plus 20 seeded elliptic orbits, 10 periods each.

    Shared by the conservation, orbit-equation, and hodograph criteria,
    so the (dominant) integration cost is paid once.  Returns the
    battery and its wall-clock integration time.
    """
    points = [fixture_c1()] + [
        sample_orbit_elements(1000 + k, params.gamma, ecc_range=(0.05, 0.85))
        for k in range(20)
    ]
    t0 = time.perf_counter()
    battery = run_orbit_battery(points, params, n_periods=10, store_every=8)
    elapsed = time.perf_counter() - t0
    return battery, elapsed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        passed, detail = ACCEPTANCE_LINES[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status} - {detail}")
