"""HTTP service exposing the mining engine.

Run with ``classmine serve`` or ``uvicorn classmine.service:app``.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__, api
from .graph import GraphError
from .schemas import (
    CompareRequest,
    CompareResponse,
    EstimateRequest,
    ExactRequest,
    ExportRequest,
    ExportResponse,
    SweepRequest,
    SweepResponse,
)

app = FastAPI(title="classmine", version=__version__)


@app.exception_handler(api.InputError)
async def _input_error(request: Request, exc: api.InputError):
    return JSONResponse(status_code=422, content={"error": "input", "detail": str(exc)})


@app.exception_handler(api.EstimationFailed)
async def _estimation_failed(request: Request, exc: api.EstimationFailed):
    return JSONResponse(status_code=500, content={"error": "EstimationFailed", "detail": str(exc),
                                                  "partial": exc.partial})


@app.exception_handler(GraphError)
async def _graph_error(request: Request, exc: GraphError):
    return JSONResponse(status_code=500, content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(RuntimeError)
async def _runtime_error(request: Request, exc: RuntimeError):
    return JSONResponse(status_code=500, content={"error": type(exc).__name__, "detail": str(exc)})


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/estimate")
def estimate(req: EstimateRequest):
    report, metrics = api.estimate(req)
    return {"report": report, "metrics": metrics.to_dict()}


@app.post("/mcc")
def mcc(req: EstimateRequest):
    report, metrics = api.estimate(req.model_copy(update={"mcc": True}))
    return {"report": report, "metrics": metrics.to_dict()}


@app.post("/exact")
def exact(req: ExactRequest):
    return {"report": api.exact(req)}


@app.post("/compare-rankings", response_model=CompareResponse)
def compare_rankings(req: CompareRequest):
    return {"comparisons": api.compare(req)}


@app.post("/alpha-sweep", response_model=SweepResponse)
def alpha_sweep(req: SweepRequest):
    return api.alpha_sweep(req)


@app.post("/sample-export", response_model=ExportResponse)
def sample_export(req: ExportRequest):
    return {"records": api.sample_export(req)}
