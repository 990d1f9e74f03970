import pytest

from techrank.graph import build_graph


@pytest.fixture
def k22():
    g, _ = build_graph(["A", "B"], ["x", "y"], [("A", "x"), ("A", "y"), ("B", "x"), ("B", "y")])
    return g


@pytest.fixture
def m2():
    """M = [[1, 1], [1, 0]]."""
    g, _ = build_graph(["A", "B"], ["x", "y"], [("A", "x"), ("A", "y"), ("B", "x")])
    return g


@pytest.fixture
def single_edge():
    g, _ = build_graph(["A"], ["x"], [("A", "x")])
    return g


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
