"""Shared fixtures plus the acceptance pass/fail summary."""
import numpy as np
import pytest

_ACCEPTANCE_RESULTS: dict = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::test_criterion" in report.nodeid:
        _ACCEPTANCE_RESULTS[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[nodeid]
        label = nodeid.split("::", 1)[1]
        terminalreporter.write_line(f"[{'PASS' if outcome == 'passed' else 'FAIL'}] {label}")

from duomotion.body import BodyTemplate
from duomotion.fixtures import build_humanoid_template, build_robot_model


@pytest.fixture(scope="session")
def template() -> BodyTemplate:
    return build_humanoid_template()


@pytest.fixture(scope="session")
def robot(template):
    return build_robot_model(template)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
