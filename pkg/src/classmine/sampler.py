"""Random-walk estimators over the high-order network.

Lower layer: class weights from non-backtracking random-walk tours that start
and end at a supernode of already known class members.  Upper layer: an
ordinary random walk sampling subgraphs, reweighted per class to estimate the
per-pattern statistic.
"""

from __future__ import annotations

import math
import random
from bisect import bisect_left
from collections import defaultdict
from collections.abc import Iterator, Sequence
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

from .exact import BoundedClassResult, bounded_class_bfs
from .graph import (
    AttributedGraph,
    GraphError,
    PatternCode,
    Subgraph,
    canonical_code,
    hon_neighborhood,
    random_seed_subgraph,
)
from .relations import (
    HON_DEGREE,
    UNIT,
    CertifiedSet,
    FilterFn,
    Membership,
    RelationKind,
    RelationSpec,
    WeightFn,
    class_key,
    membership_oracle,
    related_local,
)
from .rng import ANCHOR, SEED, TOUR, UPPER_WALK, derive_rng, derive_seed

DEFAULT_MAX_TOUR_LEN = 10**7


class SamplingError(RuntimeError):
    pass


class NoBoundary(SamplingError):
    pass


class TourTruncated(SamplingError):
    pass


class StuckAtIsolatedNode(SamplingError):
    pass


@dataclass
class SupernodeState:
    members: frozenset[Subgraph]
    boundary_edges: list[tuple[Subgraph, Subgraph]]
    alpha_inside: float

    @property
    def boundary_degree(self) -> int:
        return len(self.boundary_edges)


def build_supernode(
    g: AttributedGraph,
    anchor: Subgraph,
    bfs: BoundedClassResult,
    h: Optional[FilterFn] = None,
) -> SupernodeState:
    members = frozenset(bfs.members)
    if anchor not in members:
        raise SamplingError("supernode must contain the anchor")
    boundary = [
        (m, nb)
        for m in sorted(members)
        for nb in hon_neighborhood(g, m, h)
        if nb not in members
    ]
    return SupernodeState(members, boundary, bfs.alpha_partial)


@dataclass
class TourResult:
    interior_sum: float
    length: int
    truncated: bool
    interior_sums: tuple[float, ...] = ()
    uncertified: int = 0


def _walk_tour(
    g: AttributedGraph,
    sn: SupernodeState,
    h: Optional[FilterFn],
    rng: random.Random,
    max_len: int,
    visit: Callable[[Subgraph, int], None],
) -> tuple[int, bool]:
    """One non-backtracking tour from the supernode back into it.

    The tour leaves through a uniformly chosen boundary edge.  At each interior
    subgraph the walk moves to a uniform neighbour other than the one it came
    from (the specific member it left, on the first step), backtracking only at
    degree one.  Returns the number of states including both supernode ends.
    """
    members = sn.members
    edges = sn.boundary_edges
    prev, cur = edges[int(rng.random() * len(edges))]
    length = 2
    rand = rng.random
    while True:
        nb = hon_neighborhood(g, cur, h)
        deg = len(nb)
        visit(cur, deg)
        if deg == 1:
            nxt = nb[0]
        else:
            r = int(rand() * (deg - 1))
            if r >= bisect_left(nb, prev):
                r += 1
            nxt = nb[r]
        length += 1
        if nxt in members:
            return length, False
        if length >= max_len:
            return length, True
        prev, cur = cur, nxt


def run_tour(
    g: AttributedGraph,
    sn: SupernodeState,
    rel: RelationSpec,
    anchor: Subgraph,
    gfn: WeightFn = UNIT,
    h: Optional[FilterFn] = None,
    rng: Optional[random.Random] = None,
    max_len: int = DEFAULT_MAX_TOUR_LEN,
    certified: Optional[CertifiedSet] = None,
    weights: Sequence[WeightFn] = (),
    member: Optional[Callable[[Subgraph], Membership]] = None,
) -> TourResult:
    """Run a single tour and sum g(S)*1{S in class}/deg(S) over interior states.

    Extra ``weights`` are accumulated on the same path into ``interior_sums``.
    """
    if sn.boundary_degree == 0:
        raise NoBoundary("supernode has no outgoing edges")
    rng = rng or random.Random()
    if member is None:
        if certified is None and rel.requires_class_context:
            certified = CertifiedSet(rel, g, anchor, sorted(sn.members))
        member = membership_oracle(rel, g, anchor, certified)
    fns = (gfn, *weights)
    sums = [0.0] * len(fns)
    uncertified = 0

    def visit(s: Subgraph, deg: int) -> None:
        nonlocal uncertified
        ans = member(s)
        if ans is Membership.YES:
            for i, fn in enumerate(fns):
                if fn.kind == "hondeg":
                    sums[i] += 1.0
                else:
                    sums[i] += fn(g, s, h) / deg
        elif ans is Membership.UNCERTIFIED:
            uncertified += 1

    length, truncated = _walk_tour(g, sn, h, rng, max_len, visit)
    return TourResult(sums[0], length, truncated, tuple(sums), uncertified)


@dataclass
class AlphaEstimate:
    value: float
    tours_used: int
    tour_mean: float
    tour_stderr: float
    exact: bool
    steps_total: int
    budget_used: int = 0
    supernode_size: int = 0
    boundary_degree: int = 0
    alpha_inside: float = 0.0
    tour_length_mean: float = 0.0
    tour_length_stderr: float = 0.0
    truncated_tours: int = 0
    uncertified: int = 0
    certification_overflow: int = 0
    degenerate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _mean_stderr(xs: Sequence[float]) -> tuple[float, float]:
    n = len(xs)
    if n == 0:
        return 0.0, 0.0
    m = math.fsum(xs) / n
    if n == 1:
        return m, 0.0
    var = math.fsum((x - m) ** 2 for x in xs) / (n - 1)
    return m, math.sqrt(var / n)


@dataclass
class _LowerResult:
    estimates: list[AlphaEstimate]
    certified: list[Subgraph]


def _estimate_weights(
    g: AttributedGraph,
    anchor: Subgraph,
    rel: RelationSpec,
    weights: Sequence[WeightFn],
    h: Optional[FilterFn],
    budget: int,
    tours: int,
    seed: int,
    max_len: int,
    allow_truncation: bool,
    certified_cap: Optional[int],
    bfs: Optional[BoundedClassResult] = None,
    sn: Optional[SupernodeState] = None,
) -> _LowerResult:
    if tours < 1:
        raise ValueError("tours must be >= 1")
    if bfs is None:
        bfs = bounded_class_bfs(g, anchor, rel, budget, weights[0], h)
    insides = [bfs.alpha_partial] + [math.fsum(w(g, m, h) for m in bfs.members) for w in weights[1:]]
    if bfs.complete:
        ests = [
            AlphaEstimate(v, 0, 0.0, 0.0, True, bfs.visited_count, bfs.visited_count,
                          len(bfs.members), 0, v)
            for v in insides
        ]
        return _LowerResult(ests, list(bfs.members))
    if sn is None:
        sn = build_supernode(g, anchor, bfs, h)
    if sn.boundary_degree == 0:
        ests = [
            AlphaEstimate(v, 0, 0.0, 0.0, False, bfs.visited_count, bfs.visited_count,
                          len(sn.members), 0, v, degenerate=True)
            for v in insides
        ]
        return _LowerResult(ests, list(bfs.members))

    certified = None
    if rel.requires_class_context:
        certified = CertifiedSet(rel, g, anchor, sorted(sn.members), cap=certified_cap)
    member = membership_oracle(rel, g, anchor, certified)
    per_weight: list[list[float]] = [[] for _ in weights]
    lengths: list[int] = []
    truncated = 0
    uncertified = 0
    rng = random.Random()
    for i in range(tours):
        rng.seed(derive_seed(seed, TOUR, i))  # same stream as derive_rng, without reallocating
        tr = run_tour(
            g, sn, rel, anchor, weights[0], h, rng, max_len,
            certified, weights[1:], member,
        )
        if tr.truncated:
            truncated += 1
            if not allow_truncation:
                raise TourTruncated(f"tour {i} from {anchor} exceeded {max_len} steps")
        lengths.append(tr.length)
        uncertified += tr.uncertified
        for j, v in enumerate(tr.interior_sums):
            per_weight[j].append(v)

    D = sn.boundary_degree
    steps = bfs.visited_count + sum(lengths)
    len_mean, len_se = _mean_stderr(lengths)
    overflow = certified.overflow if certified is not None else 0
    ests = []
    for j in range(len(weights)):
        mean, se = _mean_stderr(per_weight[j])
        ests.append(AlphaEstimate(
            value=D * mean + insides[j],
            tours_used=tours,
            tour_mean=mean,
            tour_stderr=se,
            exact=False,
            steps_total=steps,
            budget_used=bfs.visited_count,
            supernode_size=len(sn.members),
            boundary_degree=D,
            alpha_inside=insides[j],
            tour_length_mean=len_mean,
            tour_length_stderr=len_se,
            truncated_tours=truncated,
            uncertified=uncertified,
            certification_overflow=overflow,
        ))
    members = list(certified) if certified is not None else sorted(sn.members)
    return _LowerResult(ests, members)


def estimate_alpha(
    g: AttributedGraph,
    anchor: Subgraph,
    rel: RelationSpec,
    gfn: WeightFn = UNIT,
    h: Optional[FilterFn] = None,
    budget: int = 100,
    tours: int = 10,
    seed: int = 0,
    max_len: int = DEFAULT_MAX_TOUR_LEN,
    allow_truncation: bool = False,
    certified_cap: Optional[int] = None,
    bfs: Optional[BoundedClassResult] = None,
    supernode: Optional[SupernodeState] = None,
) -> AlphaEstimate:
    """Unbiased estimate of the class weight of ``anchor``.

    Runs the bounded BFS first; if it completes the value is exact and no
    tours are taken.  A precomputed ``bfs``/``supernode`` may be passed to
    repeat the sampling stage only.
    """
    return _estimate_weights(
        g, anchor, rel, [gfn], h, budget, tours, seed, max_len, allow_truncation,
        certified_cap, bfs, supernode,
    ).estimates[0]


def estimate_alpha_pair(
    g: AttributedGraph,
    anchor: Subgraph,
    rel: RelationSpec,
    gfn: WeightFn = UNIT,
    h: Optional[FilterFn] = None,
    budget: int = 100,
    tours: int = 10,
    seed: int = 0,
    max_len: int = DEFAULT_MAX_TOUR_LEN,
    allow_truncation: bool = False,
    certified_cap: Optional[int] = None,
) -> tuple[AlphaEstimate, AlphaEstimate]:
    """Estimates of the class weight and of the class's summed HON degree, from shared tours."""
    res = _estimate_weights(
        g, anchor, rel, [gfn, HON_DEGREE], h, budget, tours, seed, max_len,
        allow_truncation, certified_cap,
    )
    return res.estimates[0], res.estimates[1]


# --------------------------------------------------------------------------- upper layer


def default_burn_in(g: AttributedGraph, k: int) -> int:
    return 10 * k * math.ceil(math.log(max(g.node_count, 2)))


def upper_walk(
    g: AttributedGraph,
    k: int,
    t: int,
    burn_in: Optional[int] = None,
    h: Optional[FilterFn] = None,
    rng: Optional[random.Random] = None,
    start: Optional[Subgraph] = None,
) -> Iterator[Subgraph]:
    """Simple random walk on the filtered HON; yields ``t`` states after burn-in."""
    rng = rng or random.Random()
    if burn_in is None:
        burn_in = default_burn_in(g, k)
    cur = start if start is not None else random_seed_subgraph(g, k, h, rng)
    total = burn_in + t
    for i in range(total):
        if i >= burn_in:
            yield cur
        if i == total - 1:
            return
        nb = hon_neighborhood(g, cur, h)
        if not nb:
            raise StuckAtIsolatedNode(f"subgraph {cur} has no HON neighbours")
        cur = nb[int(rng.random() * len(nb))]


def nonbacktracking_walk(
    g: AttributedGraph,
    k: int,
    steps: int,
    h: Optional[FilterFn] = None,
    rng: Optional[random.Random] = None,
    start: Optional[Subgraph] = None,
) -> Iterator[Subgraph]:
    """Free-running non-backtracking walk on the HON (no supernode)."""
    rng = rng or random.Random()
    cur = start if start is not None else random_seed_subgraph(g, k, h, rng)
    prev = None
    for _ in range(steps):
        yield cur
        nb = hon_neighborhood(g, cur, h)
        deg = len(nb)
        if deg == 0:
            raise StuckAtIsolatedNode(f"subgraph {cur} has no HON neighbours")
        if deg == 1 or prev is None:
            nxt = nb[int(rng.random() * deg)]
        else:
            r = int(rng.random() * (deg - 1))
            if r >= bisect_left(nb, prev):
                r += 1
            nxt = nb[r]
        prev, cur = cur, nxt


# --------------------------------------------------------------------------- F estimator


@dataclass(frozen=True)
class LowerParams:
    rel: RelationSpec
    gfn: WeightFn
    h: Optional[FilterFn]
    budget: int
    tours: int
    seed: int
    max_len: int = DEFAULT_MAX_TOUR_LEN
    allow_truncation: bool = False
    certified_cap: Optional[int] = None
    mcc: bool = False


@dataclass
class ClassResult:
    anchor: Subgraph
    alpha1: Optional[AlphaEstimate]
    alpha2: AlphaEstimate
    certified: list[Subgraph]


def estimate_class(g: AttributedGraph, anchor: Subgraph, p: LowerParams) -> ClassResult:
    """Lower-layer work unit for one anchor; its RNG depends only on (seed, anchor)."""
    seed = derive_seed(p.seed, ANCHOR, *anchor)
    if p.mcc:
        res = _estimate_weights(g, anchor, p.rel, [HON_DEGREE], p.h, p.budget, p.tours, seed,
                                p.max_len, p.allow_truncation, p.certified_cap)
        return ClassResult(anchor, None, res.estimates[0], res.certified)
    res = _estimate_weights(g, anchor, p.rel, [p.gfn, HON_DEGREE], p.h, p.budget, p.tours, seed,
                            p.max_len, p.allow_truncation, p.certified_cap)
    return ClassResult(anchor, res.estimates[0], res.estimates[1], res.certified)


@dataclass
class ClassEstimate:
    class_id: int
    anchor: Subgraph
    code: PatternCode
    alpha1: float
    alpha2: float
    alpha1_estimate: Optional[AlphaEstimate]
    alpha2_estimate: AlphaEstimate
    visits: int = 0

    @property
    def ratio(self) -> float:
        return self.alpha1 / self.alpha2


@dataclass
class FEstimate:
    F: dict[PatternCode, float]
    lambda_hat: float
    samples_used: int
    classes: list[ClassEstimate] = field(default_factory=list)
    upper_steps: int = 0
    lower_steps: int = 0
    bfs_steps: int = 0
    tour_steps: int = 0
    truncated_tours: int = 0
    uncertified: int = 0
    certification_overflow: int = 0
    trajectory: list[dict] = field(default_factory=list)

    def ranking(self) -> list[PatternCode]:
        return sorted(self.F, key=lambda c: (-self.F[c], c))


def sse(F_hat: dict[PatternCode, float], F_true: dict[PatternCode, float], scale: float = 1.0) -> float:
    keys = set(F_hat) | set(F_true)
    return math.fsum(((F_hat.get(c, 0.0) - F_true.get(c, 0.0)) * scale) ** 2 for c in keys)


class FPipeline:
    """Deterministic class resolution and accumulation for the upper layer.

    Samples are consumed in walk order, in batches.  Anchors whose class is
    not yet known are estimated (possibly in parallel); results are merged in
    batch order, so the outcome depends on the batch size but never on how
    the lower-layer work was scheduled.
    """

    def __init__(
        self,
        g: AttributedGraph,
        params: LowerParams,
        checkpoints: Sequence[int] = (),
        truth: Optional[dict[PatternCode, float]] = None,
    ):
        self.g = g
        self.p = params
        self.checkpoints = set(checkpoints)
        self.truth = truth
        self.classes: list[ClassEstimate] = []
        self._by_key: dict = {}
        self._by_member: dict[Subgraph, int] = {}
        self._pattern_sum: dict[PatternCode, float] = defaultdict(float)
        self._lam = 0.0
        self._n = 0
        self.trajectory: list[dict] = []

    def resolve(self, s: Subgraph) -> Optional[int]:
        rel = self.p.rel
        key = class_key(rel, self.g, s)
        if key is not None:
            return self._by_key.get(key)
        cid = self._by_member.get(s)
        if cid is not None or rel.requires_class_context:
            return cid
        for c in self.classes:
            if related_local(rel, self.g, c.anchor, s):
                return c.class_id
        return None

    def pending_anchors(self, batch: Sequence[Subgraph]) -> list[Subgraph]:
        out: list[Subgraph] = []
        seen = set()
        for s in batch:
            if self.resolve(s) is not None:
                continue
            key = class_key(self.p.rel, self.g, s)
            key = s if key is None else key
            if key in seen:
                continue
            seen.add(key)
            out.append(s)
        return out

    def register(self, res: ClassResult) -> None:
        if self.resolve(res.anchor) is not None:
            # another anchor of this batch already covered the class
            return
        a2 = res.alpha2.value
        a1 = 1.0 if res.alpha1 is None else res.alpha1.value
        if a2 <= 0:
            raise SamplingError(f"class of {res.anchor} has zero estimated HON degree")
        cid = len(self.classes)
        ce = ClassEstimate(cid, res.anchor, canonical_code(self.g, res.anchor), a1, a2,
                           res.alpha1, res.alpha2)
        self.classes.append(ce)
        key = class_key(self.p.rel, self.g, res.anchor)
        if key is not None:
            self._by_key[key] = cid
        else:
            for m in res.certified:
                self._by_member.setdefault(m, cid)

    def consume(self, batch: Sequence[Subgraph]) -> None:
        for s in batch:
            cid = self.resolve(s)
            if cid is None:
                raise SamplingError(f"sample {s} was not resolved to a class")
            c = self.classes[cid]
            c.visits += 1
            r = c.ratio
            self._pattern_sum[c.code] += r
            self._lam += r
            self._n += 1
            if self._n in self.checkpoints:
                self._snapshot()

    @property
    def samples_used(self) -> int:
        return self._n

    def current_F(self) -> dict[PatternCode, float]:
        lam = self._lam
        return {c: v / lam for c, v in sorted(self._pattern_sum.items())} if lam else {}

    def _snapshot(self) -> None:
        point = {"samples": self._n}
        if self.truth is not None:
            point["sse"] = sse(self.current_F(), self.truth)
        self.trajectory.append(point)

    def result(self, upper_steps: int = 0) -> FEstimate:
        est = FEstimate(self.current_F(), self._lam, self._n, self.classes, upper_steps=upper_steps,
                        trajectory=self.trajectory)
        for c in self.classes:
            a = c.alpha2_estimate
            est.lower_steps += a.steps_total
            est.bfs_steps += a.budget_used
            est.tour_steps += a.steps_total - a.budget_used
            est.truncated_tours += a.truncated_tours
            est.uncertified += a.uncertified
            est.certification_overflow += a.certification_overflow
        return est


def estimate_F(
    g: AttributedGraph,
    k: int,
    rel: RelationSpec,
    gfn: WeightFn = UNIT,
    h: Optional[FilterFn] = None,
    t: int = 1000,
    q: int = 10,
    budget: int = 100,
    seed: int = 0,
    burn_in: Optional[int] = None,
    mcc: bool = False,
    max_len: int = DEFAULT_MAX_TOUR_LEN,
    allow_truncation: bool = False,
    certified_cap: Optional[int] = None,
    start: Optional[Subgraph] = None,
    checkpoints: Sequence[int] = (),
    truth: Optional[dict[PatternCode, float]] = None,
) -> FEstimate:
    """Sequential upper-layer estimator of the per-pattern statistic.

    ``mcc`` replaces the class weight by the constant 1, so only the summed
    HON degree of each class is sampled.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if burn_in is None:
        burn_in = default_burn_in(g, k)
    params = LowerParams(rel, gfn, h, budget, q, seed, max_len, allow_truncation, certified_cap, mcc)
    pipe = FPipeline(g, params, checkpoints, truth)
    walk_rng = derive_rng(seed, UPPER_WALK)
    if start is None:
        start = random_seed_subgraph(g, k, h, derive_rng(seed, SEED))
    for s in upper_walk(g, k, t, burn_in, h, walk_rng, start):
        for anchor in pipe.pending_anchors([s]):
            pipe.register(estimate_class(g, anchor, params))
        pipe.consume([s])
    return pipe.result(upper_steps=burn_in + t - 1)
