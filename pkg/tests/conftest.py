import os

import numpy as np
import pytest

from spherecomp.models import (
    bump_profile, round_profile, synthetic_anisotropic, synthetic_constant, warped_geometry,
)

_criteria: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria.setdefault(marker[0], [marker[1], True])
        if report.outcome != "passed":
            _criteria[marker[0]][1] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_criteria):
        title, ok = _criteria[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k}: {title}")


@pytest.fixture(scope="session")
def round2():
    return warped_geometry(round_profile(), 2)


@pytest.fixture(scope="session")
def syn102():
    return synthetic_constant(1.02, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def bump(beta, n=2):
    return warped_geometry(bump_profile(beta), n)


@pytest.fixture
def single_worker(monkeypatch):
    monkeypatch.setenv("SPHERECOMP_WORKERS", "1")


ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
