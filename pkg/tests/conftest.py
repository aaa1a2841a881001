import os

import numpy as np
import pytest
from hypothesis import settings

from h2bid import EconomicParams
from h2bid.synthetic import synthetic_dataset

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): release criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    label = mark.args[0]
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _ACCEPTANCE.append((status, label))
    elif rep.when == "setup" and rep.failed:
        _ACCEPTANCE.append(("FAIL", label))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for status, label in _ACCEPTANCE:
        terminalreporter.write_line(f"{status:4s}  {label}")


@pytest.fixture(scope="session")
def params():
    return EconomicParams()


@pytest.fixture(scope="session")
def small_data():
    return synthetic_dataset(400, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixture_paths():
    return {k: os.path.join(FIXTURES, f"{k}.csv") for k in ("prices", "wind", "curves")}
