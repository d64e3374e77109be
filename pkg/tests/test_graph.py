import io
import itertools
import random
from collections import Counter

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from networkx.algorithms.isomorphism import categorical_node_match

from classmine.graph import (
    DisconnectedNodeSet,
    GraphError,
    GraphFormatError,
    NodeOutOfRange,
    SeedNotFound,
    SubgraphTooLarge,
    canonical_code,
    decode_code,
    dump_graph,
    enumerate_cis,
    hon_degree,
    hon_neighborhood,
    induced_subgraph,
    is_connected,
    load_graph,
    random_seed_subgraph,
)

from conftest import complete, cycle, gnp, make_graph, path, star, to_nx


def naive_cis(g, k):
    return sorted(
        tuple(c) for c in itertools.combinations(range(g.node_count), k) if is_connected(g, c)
    )


def naive_neighbors(g, s, pool):
    return sorted(t for t in pool if t != s and len(set(s) & set(t)) == len(s) - 1)


# ----------------------------------------------------------------------------- loading


def test_load_triangle():
    g = load_graph(b"v 0 1\nv 1 1\nv 2 1\ne 0 1\ne 1 2\ne 0 2\n")
    assert g.node_count == 3
    assert [g.degree(v) for v in range(3)] == [2, 2, 2]
    assert g.label_count == 1


def test_load_empty():
    g = load_graph(b"")
    assert g.node_count == 0 and g.edge_count == 0


def test_load_comments_header_and_stream():
    text = "# header\nt # 0\nv 0 3\nv 1 4\n\ne 0 1 7\n"
    g = load_graph(io.StringIO(text))
    assert g.labels == (3, 4)
    assert list(g.edges()) == [(0, 1)]


def test_load_path(tmp_path):
    p = tmp_path / "g.lg"
    p.write_text("v 0 0\nv 1 0\ne 0 1\n")
    assert load_graph(p).edge_count == 1
    assert load_graph(str(p)).edge_count == 1


def test_load_edgelist():
    g = load_graph(b"0 1\n1 2\n", format="edgelist")
    assert g.node_count == 3 and g.labels == (0, 0, 0)


@pytest.mark.parametrize(
    "text, line",
    [
        ("v 0 a\n", 1),
        ("v 0 1\nv 1 1\ne 0 5\n", 3),
        ("v 0 1\nx 1 2\n", 2),
        ("v 0 1\nv 0 1\n", 2),
        ("v 0 1\nv 2 1\n", None),
    ],
)
def test_load_errors(text, line):
    with pytest.raises(GraphError) as err:
        load_graph(text.encode())
    if line is not None:
        assert isinstance(err.value, GraphFormatError)
        assert err.value.line == line


def test_strict_vs_lenient():
    text = b"v 0 0\nv 1 0\ne 0 1\ne 1 0\ne 1 1\n"
    with pytest.raises(GraphError):
        load_graph(text, strict=True)
    g = load_graph(text, strict=False)
    assert g.edge_count == 1


def test_dump_roundtrip():
    g = gnp(9, 0.4, 1, n_labels=3)
    h = load_graph(dump_graph(g).encode())
    assert h.adjacency == g.adjacency and h.labels == g.labels


def test_adjacency_invariants():
    g = gnp(15, 0.3, 7)
    for v in range(g.node_count):
        assert list(g.adjacency[v]) == sorted(set(g.adjacency[v]))
        assert v not in g.adjacency[v]
        for u in g.adjacency[v]:
            assert v in g.adjacency[u]


# ----------------------------------------------------------------------------- induced subgraphs


def test_induced_subgraph_examples(c5, k4):
    assert induced_subgraph(c5, {2, 0, 1}) == (0, 1, 2)
    with pytest.raises(DisconnectedNodeSet):
        induced_subgraph(c5, {0, 2})
    with pytest.raises(NodeOutOfRange):
        induced_subgraph(c5, {0, 9})
    assert len([induced_subgraph(k4, c) for c in itertools.combinations(range(4), 3)]) == 4


# ----------------------------------------------------------------------------- HON neighborhoods


def test_hon_neighborhood_c5(c5):
    assert hon_neighborhood(c5, (0, 1, 2)) == [(0, 1, 4), (1, 2, 3)]
    assert hon_degree(c5, (0, 1, 2)) == 2


def test_hon_neighborhood_single_edge():
    g = path(2)
    assert hon_neighborhood(g, (0, 1)) == []
    assert hon_degree(g, (0, 1)) == 0


def test_hon_neighborhood_star():
    g = star(3)
    assert hon_neighborhood(g, (0, 1)) == [(0, 2), (0, 3)]


@pytest.mark.parametrize("m", [4, 5, 6])
def test_hon_degree_complete_k2(m):
    g = complete(m)
    edges = naive_cis(g, 2)
    for e in edges:
        assert hon_degree(g, e) == len(naive_neighbors(g, e, edges)) == 2 * (m - 2)


def test_hon_filter_restricts_neighbors():
    g = complete(4)
    h = lambda g_, s: 3 not in s  # noqa: E731
    assert hon_neighborhood(g, (0, 1), h) == [(0, 2), (1, 2)]


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("k", [2, 3, 4])
def test_hon_matches_bruteforce_and_is_symmetric(seed, k):
    g = gnp(11, 0.35, seed)
    pool = naive_cis(g, k)
    nbr = {s: hon_neighborhood(g, s) for s in pool}
    for s in pool:
        assert nbr[s] == naive_neighbors(g, s, pool)
        assert hon_degree(g, s) == len(nbr[s])
        for t in nbr[s]:
            assert s in nbr[t]


def _hon_nx(g, k):
    pool = list(enumerate_cis(g, k))
    hon = nx.Graph()
    hon.add_nodes_from(pool)
    for s in pool:
        for t in hon_neighborhood(g, s):
            hon.add_edge(s, t)
    return hon


@pytest.mark.parametrize("m", [5, 7])
def test_odd_cycle_hon_connected_and_not_bipartite(m):
    g = cycle(m)
    for k in range(2, m):
        hon = _hon_nx(g, k)
        assert nx.is_connected(hon)
        assert not nx.is_bipartite(hon)


# ----------------------------------------------------------------------------- canonical codes


def test_code_layout_triangle_and_path():
    tri = complete(3)
    p3 = path(3)
    assert canonical_code(tri, (0, 1, 2)).hex() == "03" + "00000000" * 3 + "07"
    assert canonical_code(p3, (0, 1, 2)).hex() == "03" + "00000000" * 3 + "03"
    assert canonical_code(tri, (0, 1, 2)) != canonical_code(p3, (0, 1, 2))


def test_triangles_with_arbitrary_ids_share_code():
    g = make_graph(7, [(0, 5), (5, 6), (0, 6), (1, 2), (2, 3), (1, 3)])
    assert canonical_code(g, (0, 5, 6)) == canonical_code(g, (1, 2, 3))


def test_labels_distinguish_codes():
    g = path(3, labels=[1, 2, 1])
    h = path(3, labels=[2, 1, 1])
    assert canonical_code(g, (0, 1, 2)) != canonical_code(h, (0, 1, 2))


def test_decode_code_roundtrip():
    g = gnp(10, 0.5, 3, n_labels=3)
    for s in enumerate_cis(g, 4):
        labels, edges = decode_code(canonical_code(g, s))
        sub = to_nx(g, s)
        dec = nx.Graph()
        for i, lab in enumerate(labels):
            dec.add_node(i, label=lab)
        dec.add_edges_from(edges)
        assert nx.is_isomorphic(sub, dec, node_match=categorical_node_match("label", None))


def test_too_large():
    g = path(10)
    with pytest.raises(SubgraphTooLarge):
        canonical_code(g, tuple(range(9)))
    assert canonical_code(g, tuple(range(9)), max_k=9)


@pytest.mark.parametrize("seed", range(6))
def test_code_equality_matches_isomorphism_oracle(seed):
    g = gnp(10, 0.45, seed, n_labels=2)
    subs = list(enumerate_cis(g, 4))
    rng = random.Random(seed)
    pairs = [tuple(rng.sample(subs, 2)) for _ in range(150)] if len(subs) > 1 else []
    nm = categorical_node_match("label", None)
    for a, b in pairs:
        iso = nx.is_isomorphic(to_nx(g, a), to_nx(g, b), node_match=nm)
        assert (canonical_code(g, a) == canonical_code(g, b)) == iso


@st.composite
def labeled_connected(draw):
    k = draw(st.integers(2, 6))
    labels = draw(st.lists(st.integers(0, 2), min_size=k, max_size=k))
    pairs = list(itertools.combinations(range(k), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True))
    tree = [(draw(st.integers(0, i - 1)), i) for i in range(1, k)]
    perm = draw(st.permutations(range(k)))
    return k, labels, sorted(set(chosen) | set(tree)), perm


@settings(max_examples=200, deadline=None)
@given(labeled_connected())
def test_code_invariant_under_relabeling(case):
    k, labels, edges, perm = case
    g = make_graph(k, edges, labels)
    relabeled = make_graph(k, [(perm[a], perm[b]) for a, b in edges], [labels[perm.index(i)] for i in range(k)])
    s = tuple(range(k))
    assert canonical_code(g, s) == canonical_code(relabeled, s)


# ----------------------------------------------------------------------------- enumeration


def test_enumeration_examples(c5, k4):
    assert list(enumerate_cis(complete(3), 3)) == [(0, 1, 2)]
    assert sorted(enumerate_cis(c5, 3)) == [(0, 1, 2), (0, 1, 4), (0, 3, 4), (1, 2, 3), (2, 3, 4)]
    dense = lambda g, s: 2 * sum(1 for a, b in itertools.combinations(s, 2) if g.has_edge(a, b)) > len(s) * (len(s) - 1) * 0.5  # noqa: E731
    assert list(enumerate_cis(k4, 4, dense)) == [(0, 1, 2, 3)]


@pytest.mark.parametrize("seed", range(40))
def test_enumeration_matches_naive(seed):
    rng = random.Random(seed)
    g = gnp(rng.randint(1, 12), rng.uniform(0.1, 0.6), seed)
    for k in (1, 2, 3, 4):
        got = list(enumerate_cis(g, k))
        assert len(got) == len(set(got))
        assert sorted(got) == naive_cis(g, k)


# ----------------------------------------------------------------------------- seeding


def test_random_seed_examples(c5, k4):
    rng = random.Random(0)
    assert random_seed_subgraph(k4, 3, None, rng) in set(itertools.combinations(range(4), 3))
    with pytest.raises(SeedNotFound):
        random_seed_subgraph(path(2), 3, None, rng, max_attempts=50)
    seen = Counter(random_seed_subgraph(c5, 3, None, rng) for _ in range(10_000))
    assert set(seen) == set(enumerate_cis(c5, 3))


def test_random_seed_respects_filter(k4):
    h = lambda g, s: 0 not in s  # noqa: E731
    rng = random.Random(5)
    for _ in range(50):
        assert random_seed_subgraph(k4, 3, h, rng) == (1, 2, 3)
