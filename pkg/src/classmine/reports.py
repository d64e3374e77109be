"""JSON/CSV report rendering, pattern display and ranking comparison."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Iterable, Optional

from scipy import stats

from .exact import ExactFReport
from .graph import PatternCode, decode_code
from .sampler import FEstimate

PERCENT = 100.0


def render_pattern(code: PatternCode) -> str:
    """``k|labels|adjacency-bits`` with the bits in hex."""
    k = code[0]
    labels, _ = decode_code(code)
    bits = code[1 + 4 * k:]
    return f"{k}|{','.join(map(str, labels))}|{bits.hex() or '0'}"


def render_edges(code: PatternCode) -> str:
    _, edges = decode_code(code)
    return " ".join(f"{a}-{b}" for a, b in edges)


def pattern_entry(code: PatternCode, value: float, scale: float, rank: int) -> dict:
    labels, edges = decode_code(code)
    return {
        "rank": rank,
        "code": code.hex(),
        "pattern": render_pattern(code),
        "labels": labels,
        "edges": [list(e) for e in edges],
        "F": value * scale,
    }


def _ranked(F: dict[PatternCode, float]) -> list[PatternCode]:
    return sorted(F, key=lambda c: (-F[c], c))


def exact_report(rep: ExactFReport, config: dict, raw: bool = False, mcc: bool = False) -> dict:
    scale = 1.0 if raw else PERCENT
    return {
        "kind": "exact-mcc" if mcc else "exact",
        "config": config,
        "scale": scale,
        "lambda": rep.lambda_,
        "class_count": rep.class_count,
        "subgraph_count": rep.subgraph_count,
        "patterns": [
            dict(pattern_entry(c, rep.F[c], scale, i + 1),
                 classes=rep.classes_per_pattern.get(c, 0),
                 subgraphs=rep.subgraphs_per_pattern.get(c, 0))
            for i, c in enumerate(_ranked(rep.F))
        ],
    }


def estimate_report(est: FEstimate, config: dict, raw: bool = False, kind: str = "estimate") -> dict:
    scale = 1.0 if raw else PERCENT
    return {
        "kind": kind,
        "config": config,
        "scale": scale,
        "lambda_hat": est.lambda_hat,
        "samples": est.samples_used,
        "patterns": [pattern_entry(c, est.F[c], scale, i + 1) for i, c in enumerate(_ranked(est.F))],
        "classes": [
            {
                "class_id": c.class_id,
                "anchor": list(c.anchor),
                "code": c.code.hex(),
                "visits": c.visits,
                "alpha1": c.alpha1,
                "alpha2": c.alpha2,
                "alpha1_detail": c.alpha1_estimate.to_dict() if c.alpha1_estimate else None,
                "alpha2_detail": c.alpha2_estimate.to_dict(),
            }
            for c in est.classes
        ],
        "steps": {
            "upper": est.upper_steps,
            "lower": est.lower_steps,
            "bfs": est.bfs_steps,
            "tours": est.tour_steps,
            "total": est.upper_steps + est.lower_steps,
        },
        "truncated_tours": est.truncated_tours,
        "uncertified": est.uncertified,
        "certification_overflow": est.certification_overflow,
        "trajectory": est.trajectory,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)


def patterns_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["rank", "code", "pattern", "edges", "F"])
    for p in report["patterns"]:
        w.writerow([p["rank"], p["code"], p["pattern"], " ".join(f"{a}-{b}" for a, b in p["edges"]), repr(p["F"])])
    return buf.getvalue()


def rows_csv(rows: Iterable[dict]) -> str:
    rows = list(rows)
    buf = io.StringIO()
    if not rows:
        return ""
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def top_table(report: dict, n: int = 10) -> str:
    lines = [f"{'rank':>4}  {'F':>10}  pattern / edges"]
    for p in report["patterns"][:n]:
        edges = " ".join(f"{a}-{b}" for a, b in p["edges"])
        lines.append(f"{p['rank']:>4}  {p['F']:>10.4f}  {p['pattern']}  [{edges}]")
    return "\n".join(lines)


# --------------------------------------------------------------------------- ranking comparison


@dataclass
class RankingComparison:
    size: int
    tau: float
    p_value: float
    items: int

    def to_dict(self) -> dict:
        return {"size": self.size, "tau": self.tau, "p_value": self.p_value, "items": self.items}


def report_scores(report: dict) -> dict[str, float]:
    return {p["code"]: float(p["F"]) for p in report["patterns"]}


def compare_rankings(report_a: dict, report_b: dict, sizes: Iterable[int]) -> list[RankingComparison]:
    """Kendall tau-b between two pattern rankings, each truncated to ``size``.

    The compared items are the union of both top-``size`` lists; a pattern
    missing from a report scores 0 there.  The p-value is the two-sided
    normal approximation.
    """
    a = report_scores(report_a)
    b = report_scores(report_b)
    rank_a = sorted(a, key=lambda c: (-a[c], c))
    rank_b = sorted(b, key=lambda c: (-b[c], c))
    out = []
    for size in sizes:
        if size < 2:
            raise ValueError("ranking size must be >= 2")
        if size > len(rank_a) or size > len(rank_b):
            raise ValueError(
                f"ranking size {size} exceeds available patterns ({len(rank_a)} and {len(rank_b)})"
            )
        items = list(dict.fromkeys(rank_a[:size] + rank_b[:size]))
        xa = [a.get(c, 0.0) for c in items]
        xb = [b.get(c, 0.0) for c in items]
        try:
            res = stats.kendalltau(xa, xb, variant="b", method="asymptotic")
        except ZeroDivisionError:
            raise ValueError(f"ranking of size {size} is too small for the normal approximation") from None
        tau = float(res.statistic)
        p = float(res.pvalue)
        if tau != tau:
            raise ValueError(f"ranking of size {size} has no variation; tau undefined")
        out.append(RankingComparison(size, tau, p, len(items)))
    return out


def load_truth(report: dict) -> dict[PatternCode, float]:
    """Fractions per pattern code from an exact (or estimate) report."""
    scale = float(report.get("scale", 1.0))
    return {bytes.fromhex(p["code"]): float(p["F"]) / scale for p in report["patterns"]}


def find_pattern(report: dict, code_hex: str) -> Optional[dict]:
    for p in report["patterns"]:
        if p["code"] == code_hex:
            return p
    return None
