import pytest

from mcclt.chains import hardcore_chain, signed_geometric_chain
from mcclt.exact import build_finite


@pytest.fixture(scope="session")
def hardcore22():
    return build_finite(hardcore_chain(2, 2, 0.5))


@pytest.fixture(scope="session")
def signed_half():
    return build_finite(signed_geometric_chain(0.5), 30)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
