from __future__ import annotations

import numpy as np
import pytest
from hypothesis import strategies as st

from fcggnn.graph import DirectedGraph

ACCEPTANCE_LOG: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)


def random_digraph(rng: np.random.Generator, n: int, p: float = 0.3) -> DirectedGraph:
    edges = [(i, j) for i in range(n) for j in range(n) if i != j and rng.random() < p]
    return DirectedGraph.from_edges(n, edges)


@st.composite
def digraphs(draw, max_nodes: int = 8):
    n = draw(st.integers(1, max_nodes))
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    edges = draw(st.lists(pairs, max_size=n * n))
    return DirectedGraph.from_edges(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_cycle():
    return DirectedGraph.from_edges(2, [(0, 1), (1, 0)])


@pytest.fixture
def chain3():
    return DirectedGraph.from_edges(3, [(0, 1), (1, 2)])
