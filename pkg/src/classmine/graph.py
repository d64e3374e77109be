"""Attributed graphs, connected induced subgraphs and their high-order network.

A subgraph is represented as a sorted tuple of node ids.  Two subgraphs are
adjacent in the k-HON when they share exactly k-1 nodes.
"""

from __future__ import annotations

import io
import random
from bisect import insort
from collections.abc import Callable, Iterable, Iterator
from pathlib import Path
from typing import IO, Optional, Union

Subgraph = tuple[int, ...]
PatternCode = bytes

MAX_CANONICAL_K = 8
_HON_CACHE_LIMIT = 200_000


class GraphError(Exception):
    """Base class for graph-level errors."""


class GraphFormatError(GraphError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DisconnectedNodeSet(GraphError):
    pass


class NodeOutOfRange(GraphError):
    pass


class SubgraphTooLarge(GraphError):
    pass


class SeedNotFound(GraphError):
    pass


class AttributedGraph:
    """Immutable undirected node-labeled simple graph with dense node ids."""

    __slots__ = ("adjacency", "labels", "neighbor_sets", "_hon_cache", "__weakref__")

    def __init__(self, adjacency: Iterable[Iterable[int]], labels: Iterable[int]):
        self.adjacency: tuple[tuple[int, ...], ...] = tuple(
            tuple(sorted(nbrs)) for nbrs in adjacency
        )
        self.labels: tuple[int, ...] = tuple(int(x) for x in labels)
        if len(self.labels) != len(self.adjacency):
            raise GraphError("labels and adjacency disagree on node count")
        self.neighbor_sets: tuple[frozenset[int], ...] = tuple(
            frozenset(nbrs) for nbrs in self.adjacency
        )
        n = len(self.adjacency)
        for v, nbrs in enumerate(self.adjacency):
            if len(set(nbrs)) != len(nbrs):
                raise GraphError(f"duplicate neighbor in adjacency of {v}")
            for u in nbrs:
                if not 0 <= u < n:
                    raise NodeOutOfRange(f"neighbor {u} of {v} out of range")
                if u == v:
                    raise GraphError(f"self-loop at {v}")
                if v not in self.neighbor_sets[u]:
                    raise GraphError(f"asymmetric edge {v}-{u}")
        self._hon_cache: dict = {}

    @classmethod
    def from_edges(
        cls, node_count: int, edges: Iterable[tuple[int, int]], labels: Optional[Iterable[int]] = None
    ) -> "AttributedGraph":
        adj: list[set[int]] = [set() for _ in range(node_count)]
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at {u}")
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise NodeOutOfRange(f"edge {u}-{v} out of range")
            adj[u].add(v)
            adj[v].add(u)
        if labels is None:
            labels = [0] * node_count
        return cls(adj, labels)

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    @property
    def label_count(self) -> int:
        return len(set(self.labels))

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.neighbor_sets[u]

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield u, v

    def clear_cache(self) -> None:
        self._hon_cache.clear()

    def __repr__(self) -> str:
        return f"AttributedGraph(nodes={self.node_count}, edges={self.edge_count}, labels={self.label_count})"

    def __getstate__(self):
        return {"adjacency": self.adjacency, "labels": self.labels}

    def __setstate__(self, state):
        self.__init__(state["adjacency"], state["labels"])


# --------------------------------------------------------------------------- loading


def load_graph(
    source: Union[str, Path, IO[str], IO[bytes], bytes],
    format: str = "lg",
    strict: bool = True,
) -> AttributedGraph:
    """Parse a graph from a path, text/byte stream or raw bytes.

    Formats: ``lg`` (``v <id> <label>`` / ``e <u> <v>`` lines) and ``edgelist``
    (``<u> <v>`` per line, all labels 0).  With ``strict`` duplicate edges and
    self-loops raise; otherwise they are dropped.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return _parse(fh, format, strict)
    if isinstance(source, bytes):
        return _parse(io.StringIO(source.decode("utf-8")), format, strict)
    head = source.read()
    if isinstance(head, bytes):
        head = head.decode("utf-8")
    return _parse(io.StringIO(head), format, strict)


def _parse(lines: Iterable[str], format: str, strict: bool) -> AttributedGraph:
    if format == "lg":
        return _parse_lg(lines, strict)
    if format == "edgelist":
        return _parse_edgelist(lines, strict)
    raise GraphFormatError(f"unknown graph format {format!r}")


def _int(tok: str, what: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise GraphFormatError(f"non-integer {what} {tok!r}", lineno) from None


def _parse_lg(lines: Iterable[str], strict: bool) -> AttributedGraph:
    labels: dict[int, int] = {}
    raw_edges: list[tuple[int, int, int]] = []
    seen_records = False
    for lineno, line in enumerate(lines, 1):
        toks = line.split()
        if not toks or toks[0].startswith("#"):
            continue
        tag = toks[0]
        if tag == "t":
            # gSpan-style graph header, only allowed before any record
            if seen_records:
                raise GraphFormatError("multiple graphs in one file are not supported", lineno)
            continue
        seen_records = True
        if tag == "v":
            if len(toks) != 3:
                raise GraphFormatError("expected 'v <id> <label>'", lineno)
            vid = _int(toks[1], "node id", lineno)
            lab = _int(toks[2], "label", lineno)
            if vid in labels:
                raise GraphFormatError(f"node {vid} declared twice", lineno)
            if vid < 0:
                raise GraphFormatError(f"negative node id {vid}", lineno)
            labels[vid] = lab
        elif tag == "e":
            # a trailing edge label is tolerated and ignored
            if len(toks) not in (3, 4):
                raise GraphFormatError("expected 'e <u> <v>'", lineno)
            raw_edges.append((_int(toks[1], "node id", lineno), _int(toks[2], "node id", lineno), lineno))
        else:
            raise GraphFormatError(f"unknown record type {tag!r}", lineno)

    n = len(labels)
    if n and max(labels) != n - 1:
        missing = sorted(set(range(max(labels) + 1)) - set(labels))
        raise GraphFormatError(f"node ids are not dense; missing {missing[:5]}")
    return _build(n, [labels[i] for i in range(n)], raw_edges, strict)


def _parse_edgelist(lines: Iterable[str], strict: bool) -> AttributedGraph:
    raw_edges: list[tuple[int, int, int]] = []
    top = -1
    for lineno, line in enumerate(lines, 1):
        toks = line.split()
        if not toks or toks[0].startswith("#"):
            continue
        if len(toks) < 2:
            raise GraphFormatError("expected '<u> <v>'", lineno)
        u = _int(toks[0], "node id", lineno)
        v = _int(toks[1], "node id", lineno)
        if u < 0 or v < 0:
            raise GraphFormatError("negative node id", lineno)
        top = max(top, u, v)
        raw_edges.append((u, v, lineno))
    return _build(top + 1, [0] * (top + 1), raw_edges, strict)


def _build(n: int, labels: list[int], raw_edges: list[tuple[int, int, int]], strict: bool) -> AttributedGraph:
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v, lineno in raw_edges:
        if not (0 <= u < n) or not (0 <= v < n):
            raise GraphFormatError(f"edge {u}-{v} references an undeclared node", lineno)
        if u == v:
            if strict:
                raise GraphFormatError(f"self-loop at node {u}", lineno)
            continue
        if v in adj[u]:
            if strict:
                raise GraphFormatError(f"duplicate edge {u}-{v}", lineno)
            continue
        adj[u].add(v)
        adj[v].add(u)
    return AttributedGraph(adj, labels)


def dump_graph(g: AttributedGraph) -> str:
    out = [f"v {v} {lab}" for v, lab in enumerate(g.labels)]
    out += [f"e {u} {v}" for u, v in g.edges()]
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------- subgraphs


def is_connected(g: AttributedGraph, nodes: Iterable[int]) -> bool:
    nodes = list(nodes)
    if not nodes:
        return False
    remaining = set(nodes)
    stack = [remaining.pop()]
    nbr = g.neighbor_sets
    while stack:
        v = stack.pop()
        adj = nbr[v]
        hit = [u for u in remaining if u in adj]
        for u in hit:
            remaining.discard(u)
            stack.append(u)
    return not remaining


def induced_subgraph(g: AttributedGraph, nodes: Iterable[int]) -> Subgraph:
    s = tuple(sorted(set(nodes)))
    if not s:
        raise ValueError("empty node set")
    for v in s:
        if not 0 <= v < g.node_count:
            raise NodeOutOfRange(f"node {v} not in graph with {g.node_count} nodes")
    if not is_connected(g, s):
        raise DisconnectedNodeSet(f"nodes {s} do not induce a connected subgraph")
    return s


def induced_edges(g: AttributedGraph, s: Subgraph) -> list[tuple[int, int]]:
    nbr = g.neighbor_sets
    return [(a, b) for i, a in enumerate(s) for b in s[i + 1:] if b in nbr[a]]


FilterLike = Optional[Callable[[AttributedGraph, Subgraph], bool]]


def hon_neighborhood(g: AttributedGraph, s: Subgraph, h: FilterLike = None) -> list[Subgraph]:
    """All CISes sharing k-1 nodes with ``s`` (and passing ``h``), sorted.

    Results are cached on the graph; the cache is bounded and simply reset
    when full.
    """
    key = (s, h)
    cached = g._hon_cache.get(key)
    if cached is not None:
        return cached
    out = _hon_neighborhood(g, s, h)
    cache = g._hon_cache
    if len(cache) >= _HON_CACHE_LIMIT:
        cache.clear()
    cache[key] = out
    return out


def _hon_neighborhood(g: AttributedGraph, s: Subgraph, h: FilterLike) -> list[Subgraph]:
    k = len(s)
    nbr = g.neighbor_sets
    out: list[Subgraph] = []
    if k == 1:
        # every other single node shares k-1 = 0 nodes
        out = [(u,) for u in range(g.node_count) if u != s[0]]
    else:
        sset = set(s)
        for i in range(k):
            rest = s[:i] + s[i + 1:]
            rest_connected = k == 2 or is_connected(g, rest)
            cands: set[int] = set()
            for w in rest:
                cands.update(nbr[w])
            cands -= sset
            for u in cands:
                new = list(rest)
                insort(new, u)
                t = tuple(new)
                if rest_connected or is_connected(g, t):
                    out.append(t)
        out.sort()
    if h is not None:
        out = [t for t in out if h(g, t)]
    return out


def hon_degree(g: AttributedGraph, s: Subgraph, h: FilterLike = None) -> int:
    return len(hon_neighborhood(g, s, h))


# --------------------------------------------------------------------------- canonical codes

_CODE_CACHE: dict[tuple[tuple[int, ...], int], bytes] = {}


def canonical_code(g: AttributedGraph, s: Subgraph, max_k: int = MAX_CANONICAL_K) -> PatternCode:
    """Canonical byte code of the labeled subgraph induced by ``s``.

    Layout: ``[k][sorted labels, 4-byte signed big-endian each][adjacency bits]``.
    The adjacency bits list the upper triangle column by column, (0,1), (0,2),
    (1,2), (0,3), ..., under the label-respecting node order that makes this
    bit string lexicographically smallest.
    """
    k = len(s)
    if k > max_k:
        raise SubgraphTooLarge(f"subgraph of size {k} exceeds canonicalization bound {max_k}")
    labels = tuple(g.labels[v] for v in s)
    nbr = g.neighbor_sets
    mask = 0
    bit = 0
    for j in range(1, k):
        sj = s[j]
        for i in range(j):
            if sj in nbr[s[i]]:
                mask |= 1 << bit
            bit += 1
    key = (labels, mask)
    code = _CODE_CACHE.get(key)
    if code is None:
        code = _canonicalize(labels, mask)
        _CODE_CACHE[key] = code
    return code


def _pair_index(i: int, j: int) -> int:
    # column-major upper triangle index of (i, j), i < j
    return j * (j - 1) // 2 + i


def _canonicalize(labels: tuple[int, ...], mask: int) -> bytes:
    k = len(labels)

    def adj(a: int, b: int) -> int:
        if a > b:
            a, b = b, a
        return (mask >> _pair_index(a, b)) & 1

    target = sorted(labels)
    best: list[int] = []
    order: list[int] = []
    bits: list[int] = []
    used = [False] * k

    def search(pos: int) -> None:
        nonlocal best
        if pos == k:
            if not best or bits < best:
                best = bits[:]
            return
        want = target[pos]
        for c in range(k):
            if used[c] or labels[c] != want:
                continue
            start = len(bits)
            bits.extend(adj(order[i], c) for i in range(pos))
            # a prefix already above the best prefix cannot lead to a smaller code
            if best and bits > best[:len(bits)]:
                del bits[start:]
                continue
            used[c] = True
            order.append(c)
            search(pos + 1)
            order.pop()
            used[c] = False
            del bits[start:]

    search(0)
    nbits = k * (k - 1) // 2
    value = 0
    for b in best:
        value = (value << 1) | b
    nbytes = (nbits + 7) // 8
    return (
        bytes([k])
        + b"".join(x.to_bytes(4, "big", signed=True) for x in target)
        + (value.to_bytes(nbytes, "big") if nbytes else b"")
    )


def decode_code(code: PatternCode) -> tuple[list[int], list[tuple[int, int]]]:
    """Labels and edge list (canonical positions) encoded in a pattern code."""
    k = code[0]
    labels = [int.from_bytes(code[1 + 4 * i:5 + 4 * i], "big", signed=True) for i in range(k)]
    nbits = k * (k - 1) // 2
    tail = code[1 + 4 * k:]
    value = int.from_bytes(tail, "big") if tail else 0
    edges = []
    for j in range(1, k):
        for i in range(j):
            idx = _pair_index(i, j)
            if (value >> (nbits - 1 - idx)) & 1:
                edges.append((i, j))
    return labels, edges


# --------------------------------------------------------------------------- enumeration


def enumerate_cis(g: AttributedGraph, k: int, h: FilterLike = None) -> Iterator[Subgraph]:
    """Yield every connected induced k-node subgraph exactly once (ESU)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    nbr = g.adjacency
    nbr_sets = g.neighbor_sets

    def extend(sub: list[int], ext: list[int], anchor: int, excl: set[int]) -> Iterator[Subgraph]:
        if len(sub) == k:
            t = tuple(sorted(sub))
            if h is None or h(g, t):
                yield t
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            # exclusive neighbors of w: not in sub, not adjacent to sub
            new_ext = ext + [u for u in nbr[w] if u > anchor and u not in excl]
            sub.append(w)
            yield from extend(sub, new_ext, anchor, excl | nbr_sets[w] | {w})
            sub.pop()

    for v in range(g.node_count):
        if k == 1:
            if h is None or h(g, (v,)):
                yield (v,)
            continue
        ext = [u for u in nbr[v] if u > v]
        yield from extend([v], ext, v, set(nbr_sets[v]) | {v})


def random_seed_subgraph(
    g: AttributedGraph, k: int, h: FilterLike = None, rng: Optional[random.Random] = None,
    max_attempts: int = 1000,
) -> Subgraph:
    """Grow a random CIS from a uniform start node by uniform frontier picks."""
    rng = rng or random.Random()
    n = g.node_count
    if n == 0:
        raise SeedNotFound("empty graph")
    nbr = g.adjacency
    for _ in range(max_attempts):
        start = rng.randrange(n)
        chosen = [start]
        members = {start}
        while len(chosen) < k:
            frontier = sorted({u for v in chosen for u in nbr[v]} - members)
            if not frontier:
                break
            u = frontier[rng.randrange(len(frontier))]
            chosen.append(u)
            members.add(u)
        if len(chosen) < k:
            continue
        s = tuple(sorted(chosen))
        if h is None or h(g, s):
            return s
    raise SeedNotFound(f"no valid {k}-node subgraph found after {max_attempts} attempts")
