import pytest

from diffincl import models

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cex_u():
    return models.make_counterexample_U()


@pytest.fixture(scope="session")
def cex_w():
    return models.make_counterexample_W()


@pytest.fixture(scope="session")
def spiral():
    return models.make_thm24_instance("spiral")


@pytest.fixture(scope="session")
def spiral_construction(spiral):
    return spiral.construction()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
