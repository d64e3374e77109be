import sys
import random

import networkx as nx
import pytest

from classmine.graph import AttributedGraph


def make_graph(n, edges, labels=None):
    return AttributedGraph.from_edges(n, edges, labels if labels is not None else [0] * n)


def cycle(n, labels=None):
    return make_graph(n, [(i, (i + 1) % n) for i in range(n)], labels)


def path(n, labels=None):
    return make_graph(n, [(i, i + 1) for i in range(n - 1)], labels)


def complete(n, labels=None):
    return make_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)], labels)


def star(leaves, labels=None):
    return make_graph(leaves + 1, [(0, i) for i in range(1, leaves + 1)], labels)


def gnp(n, p, seed, n_labels=2):
    rng = random.Random(seed)
    nxg = nx.gnp_random_graph(n, p, seed=seed)
    return make_graph(n, list(nxg.edges()), [rng.randrange(n_labels) for _ in range(n)])


def to_nx(g, nodes=None):
    nodes = range(g.node_count) if nodes is None else nodes
    out = nx.Graph()
    for v in nodes:
        out.add_node(v, label=g.labels[v])
    for v in nodes:
        for u in g.adjacency[v]:
            if u in out and u > v:
                out.add_edge(v, u)
    return out


@pytest.fixture
def c5():
    return cycle(5)


@pytest.fixture
def k4():
    return complete(4)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance gate")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
