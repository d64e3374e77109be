"""Operations behind every CLI command and HTTP endpoint."""

from __future__ import annotations

import math
import statistics
from functools import lru_cache
from pathlib import Path
from typing import Optional

from . import reports
from .exact import EnumerationCapExceeded, exact_alpha_bruteforce, exact_F
from .graph import AttributedGraph, GraphError, canonical_code, induced_subgraph, load_graph, random_seed_subgraph
from .relations import FilterFn, RelationSpec, WeightFn
from .rng import ANCHOR, SEED, UPPER_WALK, derive_rng, derive_seed
from .runtime import JobConfig, JobFailed, RunMetrics, run_job
from .sampler import FPipeline, LowerParams, default_burn_in, estimate_alpha, estimate_class, upper_walk
from .schemas import (
    CompareRequest,
    EstimateRequest,
    ExactRequest,
    ExportRecord,
    ExportRequest,
    GraphSource,
    RunOptions,
    SweepRequest,
)


class InputError(ValueError):
    """Bad user input: maps to exit code 2 / HTTP 422."""


class EstimationFailed(RuntimeError):
    """Job aborted; ``partial`` is the report over the samples consumed before the failure."""

    def __init__(self, message: str, partial: Optional[dict]):
        super().__init__(message)
        self.partial = partial


@lru_cache(maxsize=8)
def _load_cached(path: str, mtime: float, fmt: str, strict: bool) -> AttributedGraph:
    return load_graph(path, fmt, strict)


def graph_from(src: GraphSource) -> AttributedGraph:
    try:
        if src.graph_text is not None:
            return load_graph(src.graph_text.encode(), src.graph_format, src.strict)
        p = Path(src.graph)
        if not p.is_file():
            raise InputError(f"graph file not found: {src.graph}")
        return _load_cached(str(p.resolve()), p.stat().st_mtime, src.graph_format, src.strict)
    except GraphError as exc:
        raise InputError(f"cannot load graph: {exc}") from None


def _specs(opts: RunOptions) -> tuple[RelationSpec, WeightFn, Optional[FilterFn]]:
    try:
        return RelationSpec.parse(opts.relation), WeightFn.parse(opts.weight), FilterFn.parse(opts.filter)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def config_echo(opts: RunOptions, **extra) -> dict:
    """Run parameters recorded in reports (graph contents excluded)."""
    keep = opts.model_dump(exclude={"graph_text", "truth", "raw", "workers", "queue_capacity"})
    keep.update(extra)
    return keep


def job_config(req: EstimateRequest) -> JobConfig:
    return JobConfig(
        graph=req.graph, k=req.k, relation=req.relation, weight=req.weight, filter=req.filter,
        budget=req.budget, tours=req.tours, steps=req.steps, burn_in=req.burn_in, seed=req.seed,
        workers=req.workers, max_tour_len=req.max_tour_len, enumeration_cap=req.enumeration_cap,
        certified_cap=req.certified_cap, queue_capacity=req.queue_capacity, batch=req.batch,
        mcc=req.mcc, allow_truncation=req.allow_truncation,
    )


def default_checkpoints(steps: int) -> list[int]:
    points = set()
    p = 10
    while p < steps:
        for m in (1, 2, 5):
            if m * p < steps:
                points.add(m * p)
        p *= 10
    points.add(steps)
    return sorted(points)


def estimate(req: EstimateRequest) -> tuple[dict, RunMetrics]:
    _specs(req)
    g = graph_from(req)
    cfg = job_config(req)
    truth = None
    checkpoints = req.checkpoints or []
    if req.truth is not None:
        truth = reports.load_truth(req.truth)
        checkpoints = checkpoints or default_checkpoints(req.steps)
    kind = "mcc" if req.mcc else "estimate"
    burn = default_burn_in(g, req.k) if req.burn_in is None else req.burn_in
    try:
        est, metrics = run_job(cfg, g, checkpoints=checkpoints, truth=truth)
    except JobFailed as exc:
        partial = None
        if exc.partial is not None:
            partial = reports.estimate_report(exc.partial, config_echo(req, burn_in=burn), req.raw, kind)
            partial["partial"] = True
        raise EstimationFailed(str(exc), partial) from exc
    return reports.estimate_report(est, config_echo(req, burn_in=burn), req.raw, kind), metrics


def exact(req: ExactRequest) -> dict:
    rel, gfn, h = _specs(req)
    g = graph_from(req)
    rep = exact_F(g, req.k, rel, gfn, h, mcc=req.mcc, cap=req.enumeration_cap)
    return reports.exact_report(rep, config_echo(req), req.raw, req.mcc)


def compare(req: CompareRequest) -> list[dict]:
    try:
        return [c.to_dict() for c in reports.compare_rankings(req.report_a, req.report_b, req.sizes)]
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed report: {exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _quantile(xs: list[float], q: float) -> float:
    s = sorted(xs)
    if len(s) == 1:
        return s[0]
    pos = q * (len(s) - 1)
    lo = math.floor(pos)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (s[hi] - s[lo]) * (pos - lo)


def alpha_sweep(req: SweepRequest) -> dict:
    """Repeated class-weight estimates over a grid of budgets and tour counts."""
    rel, gfn, h = _specs(req)
    g = graph_from(req)
    try:
        anchor = induced_subgraph(g, req.anchor)
    except Exception as exc:
        raise InputError(f"anchor invalid: {exc}") from None
    if len(anchor) != len(req.anchor):
        raise InputError("anchor has repeated nodes")
    if h is not None and not h(g, anchor):
        raise InputError("anchor fails the validity filter")
    try:
        truth: Optional[float] = exact_alpha_bruteforce(g, anchor, rel, gfn, h, cap=req.enumeration_cap)
    except EnumerationCapExceeded:
        truth = None
    rows = []
    summary = []
    for B in req.budgets:
        for q in req.tour_counts:
            values = []
            steps = []
            for r in range(req.repeats):
                est = estimate_alpha(
                    g, anchor, rel, gfn, h, B, q, derive_seed(req.seed, ANCHOR, B, q, r),
                    req.max_tour_len, req.allow_truncation, req.certified_cap,
                )
                values.append(est.value)
                steps.append(est.steps_total)
                rows.append({
                    "budget": B, "tours": q, "repeat": r, "value": est.value, "exact": est.exact,
                    "supernode_size": est.supernode_size, "boundary_degree": est.boundary_degree,
                    "tour_length_mean": est.tour_length_mean, "steps_total": est.steps_total,
                    "truncated_tours": est.truncated_tours, "uncertified": est.uncertified,
                    "exact_alpha": truth,
                })
            summary.append({
                "budget": B, "tours": q, "repeats": req.repeats,
                "mean": statistics.fmean(values),
                "sd": statistics.stdev(values) if len(values) > 1 else 0.0,
                "min": min(values), "q1": _quantile(values, 0.25), "median": _quantile(values, 0.5),
                "q3": _quantile(values, 0.75), "max": max(values),
                "mean_steps": statistics.fmean(steps), "exact_alpha": truth,
            })
    return {"exact_alpha": truth, "rows": rows, "summary": summary}


def sample_export(req: ExportRequest) -> list[dict]:
    """First ``n`` upper-layer samples with their class-weight estimates."""
    rel, gfn, h = _specs(req)
    if req.n == 0:
        return []
    g = graph_from(req)
    params = LowerParams(rel, gfn, h, req.budget, req.tours, req.seed, req.max_tour_len,
                         req.allow_truncation, req.certified_cap, req.mcc)
    pipe = FPipeline(g, params)
    burn = default_burn_in(g, req.k) if req.burn_in is None else req.burn_in
    start = random_seed_subgraph(g, req.k, h, derive_rng(req.seed, SEED))
    out = []
    for s in upper_walk(g, req.k, req.n, burn, h, derive_rng(req.seed, UPPER_WALK), start):
        for a in pipe.pending_anchors([s]):
            pipe.register(estimate_class(g, a, params))
        pipe.consume([s])
        c = pipe.classes[pipe.resolve(s)]
        out.append(ExportRecord(nodes=list(s), code=canonical_code(g, s).hex(),
                                alpha1=c.alpha1, alpha2=c.alpha2).model_dump())
    return out
