import numpy as np
import pytest

from asgcl.graph import Graph, build_graph

_ACCEPTANCE = []


def er_graph(n, p, rng, features=4):
    U = np.triu(rng.random((n, n)) < p, 1)
    A = (U | U.T).astype(float)
    return Graph(A, rng.normal(size=(n, features)))


@pytest.fixture
def triangle():
    return build_graph([(0, 1), (1, 2), (0, 2)], np.eye(3))


@pytest.fixture
def path3():
    return build_graph([(0, 1), (1, 2)], np.eye(3))


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert."""

    def record(criterion, passed, detail=""):
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")
        assert passed, f"criterion {criterion} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
