"""Command line client.

Commands run in-process by default; with ``--server URL`` the same request
is posted to a running ``classmine serve`` instance instead.

Exit codes: 0 success, 1 estimator/runtime failure, 2 usage or input error.
"""

from __future__ import annotations

import functools
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional

import click
from click.core import ParameterSource
from pydantic import ValidationError

from . import api, reports
from .graph import GraphError
from .runtime import WORKERS_ENV, ConfigError, read_config_file
from .sampler import SamplingError
from .schemas import CompareRequest, EstimateRequest, ExactRequest, ExportRequest, SweepRequest

log = logging.getLogger("classmine")


def _int_list(ctx, param, value):
    if value is None or isinstance(value, list):
        return value
    try:
        return [int(x) for x in str(value).replace(" ", "").split(",") if x]
    except ValueError:
        raise click.BadParameter("expected comma-separated integers") from None


def run_options(f):
    opts = [
        click.option("--graph", "graph", type=str, help="Graph file (.lg: 'v id label' / 'e u v')."),
        click.option("--graph-format", type=click.Choice(["lg", "edgelist"]), default="lg", show_default=True),
        click.option("--lenient", is_flag=True, help="Drop duplicate edges and self-loops instead of failing."),
        click.option("--k", "k", type=int, default=3, show_default=True, help="Subgraph size."),
        click.option("--relation", default="identity", show_default=True, help="identity | perc | sh:<d>"),
        click.option("--weight", default="unit", show_default=True, help="unit | hondeg"),
        click.option("--filter", "filter_", default="none", show_default=True,
                     help="none | min-internal-degree:<t>"),
        click.option("--budget", type=int, default=100, show_default=True, help="BFS budget B."),
        click.option("--tours", type=int, default=10, show_default=True, help="Tours q per class."),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--max-tour-len", type=int, default=10**7, show_default=True),
        click.option("--enumeration-cap", type=int, default=2_000_000, show_default=True),
        click.option("--certified-cap", type=int, default=None),
        click.option("--allow-truncation", is_flag=True),
        click.option("--raw", is_flag=True, help="Report fractions instead of percentages."),
        click.option("--format", "fmt", type=click.Choice(["json", "csv", "table"]), default=None),
        click.option("--out", type=click.Path(dir_okay=False), default=None),
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="key=value file mirroring these flags."),
        click.option("--server", default=None, help="Submit to a running service at this URL."),
        click.option("-v", "--verbose", is_flag=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def walk_options(f):
    opts = [
        click.option("--steps", type=int, default=1000, show_default=True, help="Upper-layer samples t."),
        click.option("--burn-in", type=int, default=None),
        click.option("--workers", type=int, default=1, show_default=True),
        click.option("--queue-capacity", type=int, default=1024, show_default=True),
        click.option("--batch", type=int, default=64, show_default=True),
        click.option("--metrics", "metrics_path", type=click.Path(dir_okay=False), default=None,
                     help="Write timing/step metrics JSON here."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


_RENAMES = {"filter_": "filter", "lenient": "strict"}
_CLI_ONLY = {"fmt", "out", "config_path", "server", "verbose", "metrics_path", "truth_path", "top"}


def _gather(ctx: click.Context, kwargs: dict) -> dict:
    """Defaults < config file < CLASSMINE_WORKERS < explicit flags."""
    merged: dict[str, Any] = {}
    explicit: dict[str, Any] = {}
    for name, value in kwargs.items():
        if name in _CLI_ONLY:
            continue
        key = _RENAMES.get(name, name)
        if name == "lenient":
            value = not value
        merged[key] = value
        if ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE:
            explicit[key] = value
    if kwargs.get("config_path"):
        try:
            file_values = read_config_file(kwargs["config_path"])
        except (OSError, ConfigError) as exc:
            raise api.InputError(f"config: {exc}") from None
        cli_only = {"out": "out", "format": "fmt", "metrics": "metrics_path", "truth": "truth_path",
                    "top": "top", "server": "server"}
        for key, value in file_values.items():
            if key == "lenient":
                key, value = "strict", not value
            if key in cli_only:
                name = cli_only[key]
                if name in kwargs and ctx.get_parameter_source(name) != ParameterSource.COMMANDLINE:
                    kwargs[name] = value
            elif key in merged or key == "mcc":
                merged[key] = value
    env = os.environ.get(WORKERS_ENV)
    if env and "workers" in merged:
        try:
            merged["workers"] = int(env)
        except ValueError:
            raise api.InputError(f"{WORKERS_ENV} must be an integer") from None
    merged.update(explicit)
    if merged.get("graph") is None:
        raise api.InputError("--graph is required")
    return merged


def _remote(kwargs: dict, endpoint: str, payload: dict) -> Any:
    import httpx

    if payload.get("graph") is not None:
        p = Path(payload["graph"])
        if not p.is_file():
            raise api.InputError(f"graph file not found: {p}")
        payload = dict(payload, graph=None, graph_text=p.read_text())
    resp = httpx.post(kwargs["server"].rstrip("/") + endpoint, json=payload, timeout=None)
    if resp.status_code == 422:
        raise api.InputError(resp.json().get("detail", resp.text))
    if resp.status_code >= 400 and resp.headers.get("content-type", "").startswith("application/json"):
        body = resp.json()
        if "partial" in body:
            raise api.EstimationFailed(body.get("detail", ""), body["partial"])
    if resp.status_code >= 400:
        raise SamplingError(f"server error {resp.status_code}: {resp.text}")
    return resp.json()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def handle_errors(f):
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (api.InputError, ValidationError, ConfigError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except api.EstimationFailed as exc:
            click.echo(f"error: {exc}", err=True)
            if exc.partial is not None:
                target = kwargs.get("out")
                target = f"{target}.partial.json" if target else "classmine-partial.json"
                Path(target).write_text(reports.dumps(exc.partial))
                click.echo(f"partial report written to {target}", err=True)
            sys.exit(1)
        except (SamplingError, GraphError, RuntimeError, ValueError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)
    return wrapper


def _setup_logging(verbose: bool) -> None:
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _render_report(report: dict, fmt: str, top: int = 10) -> str:
    if fmt == "csv":
        return reports.patterns_csv(report)
    if fmt == "table":
        return reports.top_table(report, top) + "\n"
    return reports.dumps(report)


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Relation-based graph pattern mining: exact oracles and random-walk estimators."""


def _estimate_like(ctx, kwargs, mcc: bool):
    _setup_logging(kwargs["verbose"])
    data = _gather(ctx, kwargs)
    data["mcc"] = mcc or bool(data.get("mcc"))
    if kwargs.get("truth_path"):
        try:
            data["truth"] = reports.loads(Path(kwargs["truth_path"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise api.InputError(f"cannot read truth report: {exc}") from None
    req = EstimateRequest(**data)
    if kwargs["server"]:
        body = _remote(kwargs, "/mcc" if req.mcc else "/estimate", req.model_dump())
        report, metrics = body["report"], body["metrics"]
    else:
        report, m = api.estimate(req)
        metrics = m.to_dict()
    if kwargs.get("metrics_path"):
        Path(kwargs["metrics_path"]).write_text(json.dumps(metrics, indent=2) + "\n")
    log.info("wall %.3fs, steps %d", metrics["wall_time"], metrics["total_steps"])
    _emit(_render_report(report, kwargs["fmt"] or "json", kwargs.get("top") or 10), kwargs["out"])


@main.command()
@run_options
@walk_options
@click.option("--truth", "truth_path", type=click.Path(dir_okay=False), default=None,
              help="Exact report; adds an SSE-vs-samples trajectory.")
@click.pass_context
@handle_errors
def estimate(ctx, **kwargs):
    """Estimate the per-pattern statistic with the two-layer sampler."""
    _estimate_like(ctx, kwargs, mcc=False)


@main.command()
@run_options
@walk_options
@click.option("--truth", "truth_path", type=click.Path(dir_okay=False), default=None)
@click.option("--top", type=int, default=10, show_default=True)
@click.pass_context
@handle_errors
def mcc(ctx, **kwargs):
    """Motif class counting: proportion of classes per pattern."""
    _estimate_like(ctx, kwargs, mcc=True)


@main.command()
@run_options
@click.option("--mcc", is_flag=True, help="Count classes instead of weighting them.")
@click.option("--top", type=int, default=10, show_default=True)
@click.pass_context
@handle_errors
def exact(ctx, **kwargs):
    """Exact per-pattern statistic by full enumeration."""
    _setup_logging(kwargs["verbose"])
    data = _gather(ctx, kwargs)
    req = ExactRequest(**data)
    if kwargs["server"]:
        report = _remote(kwargs, "/exact", req.model_dump())["report"]
    else:
        report = api.exact(req)
    _emit(_render_report(report, kwargs["fmt"] or "json", kwargs["top"]), kwargs["out"])


@main.command("compare-rankings")
@click.argument("report_a", type=click.Path(dir_okay=False))
@click.argument("report_b", type=click.Path(dir_okay=False))
@click.option("--sizes", callback=_int_list, default="50,100,500", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.option("--server", default=None)
@handle_errors
def compare_rankings(report_a, report_b, sizes, fmt, out, server):
    """Kendall tau-b between the pattern rankings of two reports."""
    try:
        a = reports.loads(Path(report_a).read_text())
        b = reports.loads(Path(report_b).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise api.InputError(f"cannot read report: {exc}") from None
    req = CompareRequest(report_a=a, report_b=b, sizes=sizes)
    if server:
        rows = _remote({"server": server}, "/compare-rankings", req.model_dump())["comparisons"]
    else:
        rows = api.compare(req)
    _emit(reports.rows_csv(rows) if fmt == "csv" else json.dumps(rows, indent=2) + "\n", out)


@main.command("alpha-sweep")
@run_options
@click.option("--anchor", callback=_int_list, required=True, help="Anchor node ids, comma-separated.")
@click.option("--budgets", callback=_int_list, default="10,100,1000", show_default=True)
@click.option("--tour-counts", callback=_int_list, default="10,100", show_default=True)
@click.option("--repeats", type=int, default=10, show_default=True)
@click.pass_context
@handle_errors
def alpha_sweep(ctx, **kwargs):
    """Class-weight estimates over a grid of budgets and tour counts."""
    _setup_logging(kwargs["verbose"])
    data = _gather(ctx, kwargs)
    req = SweepRequest(**data)
    if kwargs["server"]:
        body = _remote(kwargs, "/alpha-sweep", req.model_dump())
    else:
        body = api.alpha_sweep(req)
    fmt = kwargs["fmt"] or "csv"
    _emit(json.dumps(body, indent=2) + "\n" if fmt == "json" else reports.rows_csv(body["rows"]), kwargs["out"])


@main.command("sample-export")
@run_options
@walk_options
@click.option("--n", "n", type=int, default=100, show_default=True, help="Number of samples.")
@click.option("--mcc", is_flag=True)
@click.pass_context
@handle_errors
def sample_export(ctx, **kwargs):
    """Newline-delimited JSON of sampled subgraphs with class-weight estimates."""
    _setup_logging(kwargs["verbose"])
    data = _gather(ctx, kwargs)
    req = ExportRequest(**data)
    if kwargs["server"]:
        records = _remote(kwargs, "/sample-export", req.model_dump())["records"]
    else:
        records = api.sample_export(req)
    _emit("".join(json.dumps(r) + "\n" for r in records), kwargs["out"])


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("classmine.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
