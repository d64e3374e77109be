"""Subgraph relations, weight functions and validity filters.

Built-in relations: identity, pattern percolation (``perc``) and shared
d-hubs (``sh:<d>``).  Percolation is non-local (a transitive closure), so
membership during sampling is answered against a growing set of certified
class members.
"""

from __future__ import annotations

import enum
import threading
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from typing import Optional

from .graph import AttributedGraph, Subgraph, canonical_code, hon_degree


class RelationKind(str, enum.Enum):
    IDENTITY = "identity"
    PERC = "perc"
    SHARED_HUBS = "sh"
    USER = "user"


@dataclass(frozen=True)
class RelationSpec:
    kind: RelationKind
    hub_degree: Optional[int] = None
    predicate: Optional[Callable[[AttributedGraph, Subgraph, Subgraph], bool]] = field(
        default=None, compare=False
    )
    # user-defined predicates that only hold locally (like percolation's clause b)
    context: bool = False

    @property
    def requires_class_context(self) -> bool:
        return self.kind is RelationKind.PERC or (self.kind is RelationKind.USER and self.context)

    @classmethod
    def parse(cls, text: str) -> "RelationSpec":
        text = text.strip().lower()
        if text == "identity":
            return IDENTITY
        if text == "perc":
            return PERC
        if text.startswith("sh:"):
            try:
                d = int(text[3:])
            except ValueError:
                raise ValueError(f"bad hub degree in relation {text!r}") from None
            if d < 0:
                raise ValueError("hub degree must be non-negative")
            return shared_hubs(d)
        raise ValueError(f"unknown relation {text!r}; expected identity, perc or sh:<d>")

    def __str__(self) -> str:
        if self.kind is RelationKind.SHARED_HUBS:
            return f"sh:{self.hub_degree}"
        return self.kind.value


IDENTITY = RelationSpec(RelationKind.IDENTITY)
PERC = RelationSpec(RelationKind.PERC)


def shared_hubs(d: int) -> RelationSpec:
    return RelationSpec(RelationKind.SHARED_HUBS, hub_degree=d)


def user_relation(predicate, context: bool = False) -> RelationSpec:
    return RelationSpec(RelationKind.USER, predicate=predicate, context=context)


@dataclass(frozen=True)
class FilterFn:
    """Validity predicate h restricting the high-order network."""

    kind: str = "none"
    threshold: int = 0
    predicate: Optional[Callable[[AttributedGraph, Subgraph], bool]] = field(default=None, compare=False)

    def __call__(self, g: AttributedGraph, s: Subgraph) -> bool:
        if self.kind == "none":
            return True
        if self.kind == "min-internal-degree":
            members = set(s)
            nbr = g.neighbor_sets
            t = self.threshold
            for v in s:
                if len(nbr[v] & members) < t:
                    return False
            return True
        return bool(self.predicate(g, s))

    @classmethod
    def parse(cls, text: Optional[str]) -> Optional["FilterFn"]:
        if text is None:
            return None
        text = text.strip().lower()
        if text.startswith("filter="):
            text = text[len("filter="):]
        if text in ("", "none"):
            return None
        if text.startswith("min-internal-degree:"):
            try:
                t = int(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad threshold in filter {text!r}") from None
            return min_internal_degree(t)
        raise ValueError(f"unknown filter {text!r}; expected none or min-internal-degree:<t>")

    def __str__(self) -> str:
        if self.kind == "min-internal-degree":
            return f"min-internal-degree:{self.threshold}"
        return self.kind


def min_internal_degree(t: int) -> FilterFn:
    return FilterFn("min-internal-degree", threshold=t)


def user_filter(predicate) -> FilterFn:
    return FilterFn("user", predicate=predicate)


@dataclass(frozen=True)
class WeightFn:
    """Per-subgraph weight g; ``hondeg`` is the (filtered) HON degree."""

    kind: str = "unit"
    fn: Optional[Callable[[AttributedGraph, Subgraph], float]] = field(default=None, compare=False)

    def __call__(self, g: AttributedGraph, s: Subgraph, h=None) -> float:
        if self.kind == "unit":
            return 1.0
        if self.kind == "hondeg":
            return float(hon_degree(g, s, h))
        return float(self.fn(g, s))

    @classmethod
    def parse(cls, text: str) -> "WeightFn":
        text = text.strip().lower()
        if text == "unit":
            return UNIT
        if text in ("hondeg", "hon-degree"):
            return HON_DEGREE
        raise ValueError(f"unknown weight {text!r}; expected unit or hondeg")

    def __str__(self) -> str:
        return self.kind


UNIT = WeightFn("unit")
HON_DEGREE = WeightFn("hondeg")


def user_weight(fn) -> WeightFn:
    return WeightFn("user", fn=fn)


# --------------------------------------------------------------------------- relation tests


def hubs(g: AttributedGraph, s: Subgraph, d: int) -> frozenset[int]:
    """Nodes of ``s`` whose degree in the host graph is at least ``d``."""
    adj = g.adjacency
    return frozenset(v for v in s if len(adj[v]) >= d)


def related_local(rel: RelationSpec, g: AttributedGraph, a: Subgraph, b: Subgraph) -> bool:
    if a == b:
        return True
    kind = rel.kind
    if kind is RelationKind.IDENTITY:
        return False
    if kind is RelationKind.SHARED_HUBS:
        d = rel.hub_degree
        return hubs(g, a, d) == hubs(g, b, d) and canonical_code(g, a) == canonical_code(g, b)
    if kind is RelationKind.PERC:
        if len(a) != len(b) or len(set(a) & set(b)) != len(a) - 1:
            return False
        return canonical_code(g, a) == canonical_code(g, b)
    return bool(rel.predicate(g, a, b))


def class_key(rel: RelationSpec, g: AttributedGraph, s: Subgraph):
    """A hashable class identifier when the relation admits one, else None."""
    if rel.kind is RelationKind.IDENTITY:
        return s
    if rel.kind is RelationKind.SHARED_HUBS:
        return (hubs(g, s, rel.hub_degree), canonical_code(g, s))
    return None


class Membership(enum.Enum):
    YES = "yes"
    NO = "no"
    UNCERTIFIED = "uncertified"


def _faces(s: Subgraph) -> Iterable[Subgraph]:
    for i in range(len(s)):
        yield s[:i] + s[i + 1:]


class CertifiedSet:
    """Known members of one class, grown incrementally.

    Inserts are serialized by a lock; lookups are lock-free.  Once ``cap``
    members are held, further certifications are refused and counted in
    ``overflow``.
    """

    def __init__(
        self,
        rel: RelationSpec,
        g: AttributedGraph,
        anchor: Subgraph,
        members: Iterable[Subgraph] = (),
        cap: Optional[int] = None,
    ):
        self.rel = rel
        self.g = g
        self.anchor = anchor
        self.cap = cap
        self.overflow = 0
        self.members: set[Subgraph] = set()
        self._order: list[Subgraph] = []
        self._faces: set[Subgraph] = set()
        self._code = canonical_code(g, anchor) if rel.kind is RelationKind.PERC else None
        self._lock = threading.Lock()
        self.add(anchor)
        for m in members:
            self.add(m, force=True)

    def __contains__(self, s: Subgraph) -> bool:
        return s in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self._order)

    def add(self, s: Subgraph, force: bool = False) -> bool:
        with self._lock:
            if s in self.members:
                return True
            if not force and self.cap is not None and len(self.members) >= self.cap:
                self.overflow += 1
                return False
            self.members.add(s)
            self._order.append(s)
            if self._code is not None:
                self._faces.update(_faces(s))
            return True

    def touches(self, candidate: Subgraph) -> bool:
        """True when ``candidate`` is locally related to some certified member."""
        if self.rel.kind is RelationKind.PERC:
            if canonical_code(self.g, candidate) != self._code:
                return False
            faces = self._faces
            return any(f in faces for f in _faces(candidate))
        return any(related_local(self.rel, self.g, candidate, m) for m in list(self._order))


def class_membership_test(
    rel: RelationSpec,
    g: AttributedGraph,
    anchor: Subgraph,
    candidate: Subgraph,
    certified: Optional[CertifiedSet] = None,
) -> Membership:
    """Is ``candidate`` in the class of ``anchor``?

    Local relations give an exact answer.  Context relations answer YES only
    when the candidate is certified or locally related to a certified member
    (it is then certified itself); anything else is UNCERTIFIED.
    """
    if candidate == anchor:
        return Membership.YES
    if not rel.requires_class_context:
        return Membership.YES if related_local(rel, g, anchor, candidate) else Membership.NO
    if certified is None:
        certified = CertifiedSet(rel, g, anchor)
    if candidate in certified:
        return Membership.YES
    if rel.kind is RelationKind.PERC and canonical_code(g, candidate) != certified._code:
        # isomorphic relations never relate different patterns
        return Membership.NO
    if certified.touches(candidate) and certified.add(candidate):
        return Membership.YES
    return Membership.UNCERTIFIED


def membership_oracle(
    rel: RelationSpec,
    g: AttributedGraph,
    anchor: Subgraph,
    certified: Optional[CertifiedSet] = None,
) -> Callable[[Subgraph], Membership]:
    """``class_membership_test`` bound to one anchor, memoized for local relations."""
    if rel.requires_class_context:
        if certified is None:
            certified = CertifiedSet(rel, g, anchor)
        return lambda s: class_membership_test(rel, g, anchor, s, certified)
    key = class_key(rel, g, anchor)
    memo: dict[Subgraph, Membership] = {}

    def test(s: Subgraph) -> Membership:
        ans = memo.get(s)
        if ans is None:
            if key is not None:
                same = s == anchor or class_key(rel, g, s) == key
            else:
                same = related_local(rel, g, anchor, s)
            ans = Membership.YES if same else Membership.NO
            memo[s] = ans
        return ans

    return test
