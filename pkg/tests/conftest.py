import numpy as np
import pytest

from delayed_heat.bernstein import RelativisticStable, Stable


@pytest.fixture(scope="session")
def stable05():
    return Stable(0.5)


@pytest.fixture(scope="session")
def rel05():
    return RelativisticStable(0.5, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        ok = rep.passed and _CRITERIA.get(n, True)
        _CRITERIA[n] = ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if _CRITERIA[n] else 'FAIL'}")
