import pytest

from adiashort.acceptance import Scenarios

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def scenarios():
    """Full-resolution runs shared by every test that needs them."""
    return Scenarios(fast=False)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
