import pytest

from metric_ellipsoids.inner import solve_inner


@pytest.fixture(scope="session")
def solved():
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = solve_inner(n)
        return cache[n]

    return get


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
