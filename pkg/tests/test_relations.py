import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classmine.exact import partition_classes
from classmine.graph import canonical_code, enumerate_cis
from classmine.relations import (
    HON_DEGREE,
    IDENTITY,
    PERC,
    UNIT,
    CertifiedSet,
    FilterFn,
    Membership,
    RelationKind,
    RelationSpec,
    WeightFn,
    class_membership_test,
    hubs,
    membership_oracle,
    min_internal_degree,
    related_local,
    shared_hubs,
    user_relation,
    user_weight,
)

from conftest import complete, cycle, gnp, star


def naive_local(rel, g, a, b):
    """Relation predicates written directly from their definitions."""
    if a == b:
        return True
    same_code = canonical_code(g, a) == canonical_code(g, b)
    if rel.kind is RelationKind.IDENTITY:
        return False
    if rel.kind is RelationKind.SHARED_HUBS:
        d = rel.hub_degree
        ha = {v for v in a if g.degree(v) >= d}
        hb = {v for v in b if g.degree(v) >= d}
        return ha == hb and same_code
    return len(set(a) & set(b)) == len(a) - 1 and same_code


def closure_classes(rel, g, subs):
    aux = nx.Graph()
    aux.add_nodes_from(subs)
    for a, b in itertools.combinations(subs, 2):
        if naive_local(rel, g, a, b):
            aux.add_edge(a, b)
    return sorted(sorted(c) for c in nx.connected_components(aux))


RELATIONS = [IDENTITY, PERC, shared_hubs(3), shared_hubs(4), shared_hubs(100)]


def test_parse_and_render():
    assert RelationSpec.parse("identity") == IDENTITY
    assert RelationSpec.parse("PERC") == PERC
    assert RelationSpec.parse("sh:5") == shared_hubs(5)
    assert str(shared_hubs(5)) == "sh:5"
    assert PERC.requires_class_context and not shared_hubs(2).requires_class_context
    for bad in ("sh:", "sh:x", "clique", ""):
        with pytest.raises(ValueError):
            RelationSpec.parse(bad)


def test_filter_and_weight_parse():
    assert FilterFn.parse("none") is None
    assert FilterFn.parse("filter=none") is None
    assert FilterFn.parse("filter=min-internal-degree:2") == min_internal_degree(2)
    assert FilterFn.parse("min-internal-degree:2") == min_internal_degree(2)
    with pytest.raises(ValueError):
        FilterFn.parse("density:0.5")
    assert WeightFn.parse("unit") is UNIT and WeightFn.parse("hondeg") is HON_DEGREE
    with pytest.raises(ValueError):
        WeightFn.parse("pagerank")


def test_min_internal_degree_filter():
    g = complete(4)
    h = min_internal_degree(2)
    assert h(g, (0, 1, 2, 3))
    c4 = cycle(4)
    assert h(c4, (0, 1, 2, 3))
    p = star(3)
    assert not h(p, (0, 1, 2, 3))


def test_weights(c5):
    assert UNIT(c5, (0, 1, 2)) == 1.0
    assert HON_DEGREE(c5, (0, 1, 2)) == 2.0
    assert user_weight(lambda g, s: sum(s))(c5, (0, 1, 2)) == 3.0


def test_hubs_examples():
    g = star(5)
    assert hubs(g, (0, 3), 3) == {0}
    gr = gnp(10, 0.5, 2)
    for s in enumerate_cis(gr, 3):
        assert hubs(gr, s, gr.node_count) == frozenset()


def test_related_local_examples(c5):
    for rel in RELATIONS:
        assert related_local(rel, c5, (0, 1, 2), (0, 1, 2))
    assert related_local(shared_hubs(100), c5, (0, 1, 2), (2, 3, 4))
    assert related_local(PERC, c5, (0, 1, 2), (1, 2, 3))
    assert not related_local(PERC, c5, (0, 1, 2), (2, 3, 4))
    assert not related_local(IDENTITY, c5, (0, 1, 2), (1, 2, 3))


def test_shared_hubs_uses_host_degree():
    g = star(4)  # center degree 4, leaves degree 1
    assert related_local(shared_hubs(4), g, (0, 1), (0, 2))
    assert not related_local(shared_hubs(1), g, (0, 1), (0, 2))


def test_user_relation(c5):
    same_parity = user_relation(lambda g, a, b: sum(a) % 2 == sum(b) % 2)
    assert related_local(same_parity, c5, (0, 1, 2), (0, 1, 4))
    assert not related_local(same_parity, c5, (0, 1, 2), (1, 2, 3))


@pytest.mark.parametrize("seed", range(25))
@pytest.mark.parametrize("rel", RELATIONS, ids=str)
def test_local_test_matches_definition(seed, rel):
    g = gnp(10, 0.4, seed)
    subs = list(enumerate_cis(g, 3))
    for a, b in itertools.combinations(subs[:40], 2):
        assert related_local(rel, g, a, b) == naive_local(rel, g, a, b)


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("k", [2, 3, 4])
def test_partition_is_closure_and_pattern_homogeneous(seed, k):
    g = gnp(10, 0.35, 100 + seed)
    subs = sorted(enumerate_cis(g, k))
    for rel in RELATIONS:
        classes = partition_classes(g, subs, rel)
        assert classes == closure_classes(rel, g, subs)
        for c in classes:
            assert len({canonical_code(g, s) for s in c}) == 1
        assert sorted(s for c in classes for s in c) == subs


def test_identity_partition_singletons():
    g = gnp(9, 0.5, 4)
    subs = sorted(enumerate_cis(g, 3))
    assert partition_classes(g, subs, IDENTITY) == [[s] for s in subs]


def test_large_hub_threshold_gives_isomorphism_classes():
    g = gnp(11, 0.4, 8, n_labels=3)
    subs = sorted(enumerate_cis(g, 3))
    by_code = {}
    for s in subs:
        by_code.setdefault(canonical_code(g, s), []).append(s)
    assert partition_classes(g, subs, shared_hubs(g.node_count)) == sorted(by_code.values())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(RELATIONS), st.integers(2, 4))
def test_relation_is_equivalence(seed, rel, k):
    g = gnp(8, 0.45, seed)
    subs = sorted(enumerate_cis(g, k))
    classes = partition_classes(g, subs, rel)
    where = {s: i for i, c in enumerate(classes) for s in c}
    for a, b in itertools.combinations(subs, 2):
        if related_local(rel, g, a, b):
            assert where[a] == where[b]


# ----------------------------------------------------------------------------- membership


def test_membership_certified_is_yes(c5):
    cert = CertifiedSet(PERC, c5, (0, 1, 2), [(1, 2, 3)])
    assert class_membership_test(PERC, c5, (0, 1, 2), (1, 2, 3), cert) is Membership.YES


def test_membership_sh_different_code_is_no():
    g = complete(4)
    g2 = cycle(4)
    tri = (0, 1, 2)
    assert class_membership_test(shared_hubs(10), g, tri, (1, 2, 3)) is Membership.YES
    mixed = gnp(8, 0.5, 1)
    subs = list(enumerate_cis(mixed, 3))
    a = subs[0]
    other = next(s for s in subs if canonical_code(mixed, s) != canonical_code(mixed, a))
    assert class_membership_test(shared_hubs(2), mixed, a, other) is Membership.NO
    assert class_membership_test(IDENTITY, g2, (0, 1, 2), (1, 2, 3)) is Membership.NO


def test_perc_certification_replay(c5):
    anchor = (0, 1, 2)
    cert = CertifiedSet(PERC, c5, anchor)
    assert class_membership_test(PERC, c5, anchor, (2, 3, 4), cert) is Membership.UNCERTIFIED
    assert class_membership_test(PERC, c5, anchor, (1, 2, 3), cert) is Membership.YES
    assert (1, 2, 3) in cert
    assert class_membership_test(PERC, c5, anchor, (2, 3, 4), cert) is Membership.YES


def test_perc_certification_cap_counts_overflow(c5):
    anchor = (0, 1, 2)
    cert = CertifiedSet(PERC, c5, anchor, cap=1)
    assert class_membership_test(PERC, c5, anchor, (1, 2, 3), cert) is Membership.UNCERTIFIED
    assert cert.overflow == 1 and len(cert) == 1


def test_perc_different_pattern_is_no():
    g = complete(4)
    g_p = gnp(9, 0.5, 3)
    subs = list(enumerate_cis(g_p, 3))
    a = subs[0]
    other = next(s for s in subs if canonical_code(g_p, s) != canonical_code(g_p, a))
    assert class_membership_test(PERC, g_p, a, other, CertifiedSet(PERC, g_p, a)) is Membership.NO
    assert class_membership_test(PERC, g, (0, 1, 2), (0, 1, 2)) is Membership.YES


@pytest.mark.parametrize("rel", [IDENTITY, shared_hubs(3)], ids=str)
def test_oracle_matches_direct_test(rel):
    g = gnp(10, 0.4, 12)
    subs = list(enumerate_cis(g, 3))
    anchor = subs[3]
    oracle = membership_oracle(rel, g, anchor)
    for s in subs:
        assert oracle(s) is class_membership_test(rel, g, anchor, s)
        assert oracle(s) is oracle(s)
