import datetime as dt
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from riskonoff.synthetic import weekdays, write_dataset  # noqa: E402
from riskonoff.ts_core import DailySeries  # noqa: E402


def series(values, start=dt.date(2020, 1, 1), name="s"):
    vals = np.asarray(values, dtype=float)
    return DailySeries.from_pairs(weekdays(start, len(vals)), vals, name)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    """The full-size synthetic dataset (about ten years of weekdays)."""
    return write_dataset(tmp_path_factory.mktemp("data"), n_days=2520, seed=7)


@pytest.fixture(scope="session")
def small_fixture_dir(tmp_path_factory):
    return write_dataset(tmp_path_factory.mktemp("small"), n_days=800, seed=3)


_AC_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_ac" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.failed:
        _AC_RESULTS.setdefault(name, "PASS" if report.passed else "FAIL")
        if report.failed:
            _AC_RESULTS[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for num, title, fn in CRITERIA:
        verdict = _AC_RESULTS.get(fn.__name__, "NOT RUN")
        terminalreporter.write_line(f"AC{num:>2} {verdict:<7} {title}")
