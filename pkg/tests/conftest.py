"""Shared fixtures and the per-criterion summary printed after the run."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from liftbound import catalog

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        verdict = "PASS" if report.passed else "FAIL"
        _CRITERIA[props["criterion"]] = (verdict, props.get("summary", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        verdict, summary = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {verdict}  {summary}")


@pytest.fixture
def two():
    return catalog.two_state()


@pytest.fixture
def z4():
    return catalog.lazy_cycle(4)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))
