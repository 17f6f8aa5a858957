import numpy as np
import pytest

from rspmetric import RandomMetric, WeightedGraph, all_pairs_shortest_paths

# (criterion, passed, detail) rows collected by the acceptance suite
ACCEPTANCE_LOG: list[tuple[int, bool, str]] = []


@pytest.fixture
def triangle_graph():
    # w(0,1)=1, w(1,2)=1, w(0,2)=3: the two-edge path beats the direct edge
    return WeightedGraph.from_edges(3, {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 3.0})


@pytest.fixture
def greedy_trap():
    # greedy takes {0,1} (length 1) and is then forced onto {2,3} (length 10)
    d = np.array([
        [0, 1, 2, 2.5],
        [1, 0, 2.5, 2],
        [2, 2.5, 0, 10],
        [2.5, 2, 10, 0],
    ])
    return RandomMetric.from_matrix(d)


@pytest.fixture
def crossed_square():
    # tour 0-1-2-3 uses the two long edges {0,1}, {2,3}
    d = np.array([
        [0, 10, 1, 1],
        [10, 0, 1, 1],
        [1, 1, 0, 10],
        [1, 1, 10, 0],
    ], dtype=float)
    return RandomMetric.from_matrix(d)


@pytest.fixture
def metric_of():
    def make(g):
        return all_pairs_shortest_paths(g)
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for crit, ok, detail in sorted(ACCEPTANCE_LOG):
        terminalreporter.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
