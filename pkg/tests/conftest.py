import pytest

from elabmech.generate import generate_instances
from elabmech.scenario import example1

ACCEPTANCE_LINES = []


@pytest.fixture
def ex1():
    return example1()


@pytest.fixture(scope="session")
def instances():
    return generate_instances(2024)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
