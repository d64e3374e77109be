"""Producer-consumer orchestration of the upper and lower layers.

The upper walk runs in a producer thread feeding a bounded queue.  The main
thread drains it in fixed-size batches, farms new class anchors out to a
process pool and merges results in sample order.  Every anchor's random
stream is derived from (seed, anchor), so the worker count and queue size
never change the output.
"""

from __future__ import annotations

import logging
import os
import queue
import threading
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from .graph import AttributedGraph, GraphError, Subgraph, random_seed_subgraph
from .relations import FilterFn, RelationSpec, WeightFn
from .rng import SEED, UPPER_WALK, derive_rng
from .sampler import (
    DEFAULT_MAX_TOUR_LEN,
    FEstimate,
    FPipeline,
    LowerParams,
    SamplingError,
    default_burn_in,
    estimate_class,
    upper_walk,
)

log = logging.getLogger(__name__)

WORKERS_ENV = "CLASSMINE_WORKERS"
_DONE = object()


class ConfigError(ValueError):
    pass


@dataclass
class JobConfig:
    graph: Optional[str] = None
    k: int = 3
    relation: str = "identity"
    weight: str = "unit"
    filter: str = "none"
    budget: int = 100
    tours: int = 10
    steps: int = 1000
    burn_in: Optional[int] = None
    seed: int = 0
    workers: int = 1
    max_tour_len: int = DEFAULT_MAX_TOUR_LEN
    enumeration_cap: int = 2_000_000
    certified_cap: Optional[int] = None
    queue_capacity: int = 1024
    batch: int = 64
    mcc: bool = False
    allow_truncation: bool = False
    out: Optional[str] = None

    def validate(self) -> "JobConfig":
        if self.k < 2:
            raise ConfigError("k must be >= 2")
        for name in ("budget", "tours", "steps", "workers", "queue_capacity", "batch", "max_tour_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")
        try:
            self.relation_spec
            self.weight_fn
            self.filter_fn
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    @property
    def relation_spec(self) -> RelationSpec:
        return RelationSpec.parse(self.relation)

    @property
    def weight_fn(self) -> WeightFn:
        return WeightFn.parse(self.weight)

    @property
    def filter_fn(self) -> Optional[FilterFn]:
        return FilterFn.parse(self.filter)

    def with_env(self) -> "JobConfig":
        raw = os.environ.get(WORKERS_ENV)
        if raw:
            try:
                self.workers = int(raw)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        return self


# flags that exist only at the command line, with their value types
CLI_KEYS = {
    "graph_format": "str", "strict": "bool", "lenient": "bool", "raw": "bool", "format": "str",
    "metrics": "Optional[str]", "truth": "Optional[str]", "top": "int", "n": "int",
    "repeats": "int", "anchor": "list[int]", "budgets": "list[int]", "tour_counts": "list[int]",
    "sizes": "list[int]", "server": "Optional[str]",
}


def _coerce(name: str, raw: str):
    kinds = {f.name: f.type for f in fields(JobConfig)}
    kinds.update(CLI_KEYS)
    if name not in kinds:
        raise ConfigError(f"unknown config key {name!r}")
    t = str(kinds[name])
    if raw.lower() in ("none", "") and "Optional" in t:
        return None
    if t.startswith("list"):
        try:
            return [int(x) for x in raw.replace(" ", "").split(",") if x]
        except ValueError:
            raise ConfigError(f"{name}: expected comma-separated integers, got {raw!r}") from None
    if "bool" in t:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if "int" in t:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from None
    return raw


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; keys use flag spelling (``max-tour-len``) or field names."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        out[key] = _coerce(key, value)
    return out


class JobFailed(RuntimeError):
    """Estimator failure mid-job; ``partial`` holds the estimate over samples consumed so far."""

    def __init__(self, cause: BaseException, partial: Optional[FEstimate]):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause
        self.partial = partial


@dataclass
class RunMetrics:
    wall_time: float
    upper_steps: int
    lower_steps: int
    bfs_steps: int
    tour_steps: int
    total_steps: int
    classes_estimated: int
    workers: int
    worker_busy: dict = field(default_factory=dict)
    truncated_tours: int = 0
    certification_overflow: int = 0
    uncertified: int = 0
    speedup: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------- worker side

_worker_graph: Optional[AttributedGraph] = None
_worker_params: Optional[LowerParams] = None


def _init_worker(g: AttributedGraph, params: LowerParams) -> None:
    global _worker_graph, _worker_params
    _worker_graph = g
    _worker_params = params


def _run_anchor(anchor: Subgraph):
    t0 = time.perf_counter()
    res = estimate_class(_worker_graph, anchor, _worker_params)
    return res, os.getpid(), time.perf_counter() - t0


# --------------------------------------------------------------------------- driver


def lower_params(cfg: JobConfig) -> LowerParams:
    return LowerParams(
        rel=cfg.relation_spec,
        gfn=cfg.weight_fn,
        h=cfg.filter_fn,
        budget=cfg.budget,
        tours=cfg.tours,
        seed=cfg.seed,
        max_len=cfg.max_tour_len,
        allow_truncation=cfg.allow_truncation,
        certified_cap=cfg.certified_cap,
        mcc=cfg.mcc,
    )


def _producer(g, cfg: JobConfig, burn_in: int, q: "queue.Queue", stop: threading.Event) -> None:
    h = cfg.filter_fn
    try:
        start = random_seed_subgraph(g, cfg.k, h, derive_rng(cfg.seed, SEED))
        for s in upper_walk(g, cfg.k, cfg.steps, burn_in, h, derive_rng(cfg.seed, UPPER_WALK), start):
            while not stop.is_set():
                try:
                    q.put(s, timeout=0.1)
                    break
                except queue.Full:
                    continue
            if stop.is_set():
                return
        q.put(_DONE)
    except BaseException as exc:  # forwarded to the consumer side
        q.put(exc)


def run_job(
    cfg: JobConfig,
    g: AttributedGraph,
    checkpoints=(),
    truth=None,
) -> tuple[FEstimate, RunMetrics]:
    """Estimate the per-pattern statistic with one producer and ``cfg.workers`` consumers."""
    cfg.validate()
    t0 = time.perf_counter()
    params = lower_params(cfg)
    burn_in = default_burn_in(g, cfg.k) if cfg.burn_in is None else cfg.burn_in
    pipe = FPipeline(g, params, checkpoints, truth)
    samples: "queue.Queue" = queue.Queue(maxsize=cfg.queue_capacity)
    stop = threading.Event()
    producer = threading.Thread(target=_producer, args=(g, cfg, burn_in, samples, stop), daemon=True)
    busy: dict = {}

    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.workers, initializer=_init_worker, initargs=(g, params))

    def run_batch(batch: list[Subgraph]) -> None:
        anchors = pipe.pending_anchors(batch)
        if pool is None:
            results = []
            for a in anchors:
                t1 = time.perf_counter()
                results.append(estimate_class(g, a, params))
                busy[os.getpid()] = busy.get(os.getpid(), 0.0) + time.perf_counter() - t1
        else:
            results = []
            chunk = max(1, len(anchors) // (cfg.workers * 4))
            for res, pid, dt in pool.map(_run_anchor, anchors, chunksize=chunk):
                busy[pid] = busy.get(pid, 0.0) + dt
                results.append(res)
        for res in results:
            pipe.register(res)
        pipe.consume(batch)

    producer.start()
    try:
        batch: list[Subgraph] = []
        while True:
            item = samples.get()
            if item is _DONE:
                break
            if isinstance(item, BaseException):
                raise item
            batch.append(item)
            if len(batch) >= cfg.batch:
                run_batch(batch)
                batch = []
        if batch:
            run_batch(batch)
    except (SamplingError, GraphError) as exc:
        partial = pipe.result(upper_steps=burn_in + pipe.samples_used - 1) if pipe.samples_used else None
        raise JobFailed(exc, partial) from exc
    finally:
        stop.set()
        if pool is not None:
            pool.shutdown(cancel_futures=True)
        producer.join(timeout=5)

    est = pipe.result(upper_steps=burn_in + cfg.steps - 1)
    wall = time.perf_counter() - t0
    metrics = RunMetrics(
        wall_time=wall,
        upper_steps=est.upper_steps,
        lower_steps=est.lower_steps,
        bfs_steps=est.bfs_steps,
        tour_steps=est.tour_steps,
        total_steps=est.upper_steps + est.lower_steps,
        classes_estimated=len(est.classes),
        workers=cfg.workers,
        worker_busy={str(k): round(v / wall, 4) if wall else 0.0 for k, v in sorted(busy.items())},
        truncated_tours=est.truncated_tours,
        certification_overflow=est.certification_overflow,
        uncertified=est.uncertified,
    )
    log.info("job finished: %d samples, %d classes, %.2fs", est.samples_used, len(est.classes), wall)
    return est, metrics
