import pytest

from tesla_actuator.harness.scenario import prototype_motor, prototype_scenario

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def motor():
    return prototype_motor()


@pytest.fixture(scope="session")
def fixture_scenario():
    return prototype_scenario()
