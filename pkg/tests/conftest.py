import pytest

from intervaldyn import kernels
from intervaldyn.zoo import make_logistic, make_lorenz, make_rotation


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run the test once per available kernel backend."""
    with kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def logistic4():
    return make_logistic(4.0)


@pytest.fixture
def logistic32():
    return make_logistic(3.2)


@pytest.fixture
def lorenz():
    return make_lorenz(0.5, 2, 2, 0.9, 0.1)


@pytest.fixture
def rot025():
    return make_rotation(0.25)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._acceptance_lines = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    n = marker.args[0]
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    verdict = "PASS" if call.excinfo is None else "FAIL"
    item.config._acceptance_lines[n] = f"CRITERION {n:2d}: {verdict}  {detail}"


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
