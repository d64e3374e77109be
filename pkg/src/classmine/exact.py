"""Exact class computation: budget-bounded BFS and brute-force oracles."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Optional

from .graph import AttributedGraph, PatternCode, Subgraph, canonical_code, enumerate_cis, hon_neighborhood
from .relations import (
    UNIT,
    CertifiedSet,
    FilterFn,
    Membership,
    RelationKind,
    RelationSpec,
    WeightFn,
    _faces,
    class_key,
    class_membership_test,
    hubs,
    related_local,
)

DEFAULT_ENUMERATION_CAP = 2_000_000


class InvalidStart(ValueError):
    pass


class EnumerationCapExceeded(RuntimeError):
    pass


@dataclass
class BoundedClassResult:
    alpha_partial: float
    members: list[Subgraph]
    complete: bool
    visited_count: int
    uncertified: int = 0

    @property
    def member_set(self) -> frozenset[Subgraph]:
        return frozenset(self.members)


def bounded_class_bfs(
    g: AttributedGraph,
    s: Subgraph,
    rel: RelationSpec,
    budget: int,
    gfn: WeightFn = UNIT,
    h: Optional[FilterFn] = None,
) -> BoundedClassResult:
    """Breadth-first search of the HON from ``s`` visiting at most ``budget`` subgraphs.

    ``s`` itself counts as a member and as the first visited subgraph.  The
    search stops, incomplete, as soon as the visited set reaches the budget.
    For percolation, a visited subgraph that could not be certified when first
    seen is certified later if a neighbouring member turns up.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if h is not None and not h(g, s):
        raise InvalidStart(f"start subgraph {s} fails the validity filter")

    cert = CertifiedSet(rel, g, s)
    members = [s]
    alpha = gfn(g, s, h)
    visited = {s}
    queue = deque([s])
    pending: dict[Subgraph, list[Subgraph]] = defaultdict(list)
    perc = rel.kind is RelationKind.PERC
    uncertified = 0

    def certify_cascade(m: Subgraph) -> None:
        nonlocal alpha
        stack = [m]
        while stack:
            cur = stack.pop()
            for f in _faces(cur):
                for other in pending.pop(f, ()):
                    if other not in cert and cert.add(other):
                        members.append(other)
                        alpha += gfn(g, other, h)
                        stack.append(other)

    if len(visited) >= budget:
        complete = not hon_neighborhood(g, s, h)
        return BoundedClassResult(alpha, members, complete, len(visited))

    code = canonical_code(g, s) if perc else None
    while queue:
        cur = queue.popleft()
        for nxt in hon_neighborhood(g, cur, h):
            if nxt in visited:
                continue
            visited.add(nxt)
            queue.append(nxt)
            ans = class_membership_test(rel, g, s, nxt, cert)
            if ans is Membership.YES:
                members.append(nxt)
                alpha += gfn(g, nxt, h)
                if perc:
                    certify_cascade(nxt)
            elif ans is Membership.UNCERTIFIED:
                if perc and canonical_code(g, nxt) == code:
                    for f in _faces(nxt):
                        pending[f].append(nxt)
                uncertified += 1
            if len(visited) >= budget:
                return BoundedClassResult(alpha, members, False, len(visited), uncertified)
    return BoundedClassResult(alpha, members, True, len(visited), uncertified)


# --------------------------------------------------------------------------- brute force


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def all_cis(g: AttributedGraph, k: int, h: Optional[FilterFn] = None, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Subgraph]:
    out = []
    for s in enumerate_cis(g, k, h):
        out.append(s)
        if len(out) > cap:
            raise EnumerationCapExceeded(f"more than {cap} {k}-node subgraphs")
    out.sort()
    return out


def partition_classes(
    g: AttributedGraph,
    subgraphs: list[Subgraph],
    rel: RelationSpec,
) -> list[list[Subgraph]]:
    """Split ``subgraphs`` into classes: the transitive closure of ``related_local``.

    Classes come back sorted by their smallest member; members sorted.
    """
    n = len(subgraphs)
    uf = _UnionFind(n)
    kind = rel.kind
    if kind is RelationKind.IDENTITY:
        pass
    elif kind is RelationKind.SHARED_HUBS or kind is RelationKind.PERC:
        buckets: dict = {}
        for i, s in enumerate(subgraphs):
            if kind is RelationKind.SHARED_HUBS:
                keys = [(hubs(g, s, rel.hub_degree), canonical_code(g, s))]
            else:
                code = canonical_code(g, s)
                keys = [(f, code) for f in _faces(s)]
            for key in keys:
                j = buckets.setdefault(key, i)
                if j != i:
                    uf.union(i, j)
    else:
        for i in range(n):
            for j in range(i + 1, n):
                if related_local(rel, g, subgraphs[i], subgraphs[j]):
                    uf.union(i, j)
    groups: dict[int, list[Subgraph]] = defaultdict(list)
    for i, s in enumerate(subgraphs):
        groups[uf.find(i)].append(s)
    classes = [sorted(c) for c in groups.values()]
    classes.sort(key=lambda c: c[0])
    return classes


def exact_class(
    g: AttributedGraph,
    s: Subgraph,
    rel: RelationSpec,
    h: Optional[FilterFn] = None,
    k: Optional[int] = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[Subgraph]:
    k = len(s) if k is None else k
    universe = all_cis(g, k, h, cap)
    if s not in set(universe):
        raise InvalidStart(f"{s} is not a valid {k}-node subgraph under the filter")
    key = class_key(rel, g, s)
    if key is not None:
        return [t for t in universe if class_key(rel, g, t) == key]
    for c in partition_classes(g, universe, rel):
        if s in c:
            return c
    raise AssertionError("anchor missing from partition")


def exact_alpha_bruteforce(
    g: AttributedGraph,
    s: Subgraph,
    rel: RelationSpec,
    gfn: WeightFn = UNIT,
    h: Optional[FilterFn] = None,
    k: Optional[int] = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    return sum(gfn(g, t, h) for t in exact_class(g, s, rel, h, k, cap))


@dataclass
class ExactFReport:
    F: dict[PatternCode, float]
    lambda_: float
    class_count: int
    subgraph_count: int
    classes_per_pattern: dict[PatternCode, int] = field(default_factory=dict)
    subgraphs_per_pattern: dict[PatternCode, int] = field(default_factory=dict)

    def ranking(self) -> list[PatternCode]:
        return sorted(self.F, key=lambda c: (-self.F[c], c))


def exact_F(
    g: AttributedGraph,
    k: int,
    rel: RelationSpec,
    gfn: WeightFn = UNIT,
    h: Optional[FilterFn] = None,
    mcc: bool = False,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> ExactFReport:
    """Per-pattern statistic by full enumeration.

    Each subgraph contributes alpha(class)/|class|, so a class contributes its
    alpha once.  ``mcc`` fixes alpha to 1 per class (proportion of classes).
    """
    universe = all_cis(g, k, h, cap)
    classes = partition_classes(g, universe, rel)
    raw: dict[PatternCode, float] = defaultdict(float)
    n_classes: dict[PatternCode, int] = defaultdict(int)
    n_subs: dict[PatternCode, int] = defaultdict(int)
    for c in classes:
        code = canonical_code(g, c[0])
        alpha = 1.0 if mcc else sum(gfn(g, t, h) for t in c)
        raw[code] += alpha
        n_classes[code] += 1
        n_subs[code] += len(c)
    lam = sum(raw.values())
    F = {code: (v / lam if lam else 0.0) for code, v in sorted(raw.items())}
    return ExactFReport(F, lam, len(classes), len(universe), dict(n_classes), dict(n_subs))
