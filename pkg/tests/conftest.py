import numpy as np
import pytest

from chamber_harmonics.cross_section import Interval
from chamber_harmonics.harmonic_field import Side
from chamber_harmonics.junction import make_embedding, solve_matched

_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    n, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    _criteria[n] = (title, report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, passed, detail = _criteria[n]
        line = f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture(scope="session")
def nested():
    """Unit interval centred in an interval of width 2."""
    return make_embedding(Interval(1.0), Interval(2.0))


@pytest.fixture(scope="session")
def v_right(nested):
    return solve_matched(nested, 1, Side.RIGHT)


@pytest.fixture(scope="session")
def v_left(nested):
    return solve_matched(nested, 1, Side.LEFT)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
