import os

import pytest
from hypothesis import HealthCheck, settings

from yulewave.constants import ModelParams, solve_critical_thetas

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("YULEWAVE_HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def k1():
    return solve_critical_thetas(ModelParams(1.0))


@pytest.fixture(scope="session")
def waves():
    from yulewave.harness import _default_waves

    return _default_waves(1.0)


@pytest.fixture(scope="session")
def max_wave_table(waves):
    return waves[0]


@pytest.fixture(scope="session")
def min_wave_table(waves):
    return waves[1]


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def verdict(request, capsys):
    """Record and print one status line for an acceptance criterion."""

    def emit(number: int, status: str, detail: str):
        line = f"criterion {number:>2}: {status:<8} {detail}"
        request.config.acceptance_lines.append(line)
        with capsys.disabled():
            print(f"\n{line}")

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
