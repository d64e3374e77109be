"""Relation-based pattern mining on attributed graphs.

Exact enumeration oracles plus a two-layer random-walk estimator: an
upper walk over connected induced subgraphs and lower tours that estimate
the weight of each subgraph's class.
"""

__version__ = "0.1.0"

from .graph import AttributedGraph, canonical_code, enumerate_cis, hon_neighborhood, load_graph
from .relations import IDENTITY, PERC, RelationSpec, WeightFn, FilterFn, shared_hubs
from .exact import bounded_class_bfs, exact_alpha_bruteforce, exact_F
from .sampler import estimate_alpha, estimate_F
from .runtime import JobConfig, run_job

__all__ = [
    "__version__", "AttributedGraph", "canonical_code", "enumerate_cis", "hon_neighborhood",
    "load_graph", "IDENTITY", "PERC", "RelationSpec", "WeightFn", "FilterFn", "shared_hubs",
    "bounded_class_bfs", "exact_alpha_bruteforce", "exact_F", "estimate_alpha", "estimate_F",
    "JobConfig", "run_job",
]
