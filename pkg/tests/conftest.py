import pytest

from mixbank.frontend import FrontEndParams
from mixbank.model import default_grid, paper_grid

F_NYQ = 10e9

# Lines reported by the acceptance tests, printed once at the end of the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pgrid():
    return paper_grid(F_NYQ)


@pytest.fixture(scope="session")
def dgrid():
    return default_grid(F_NYQ)


@pytest.fixture(scope="session")
def fparams():
    return FrontEndParams(m=51, M=51, f_nyq=F_NYQ)
