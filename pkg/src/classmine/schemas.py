"""Request and response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class GraphSource(BaseModel):
    model_config = ConfigDict(extra="forbid")

    graph: Optional[str] = Field(None, description="path to a graph file readable by the server")
    graph_text: Optional[str] = Field(None, description="inline graph file contents")
    graph_format: Literal["lg", "edgelist"] = "lg"
    strict: bool = True

    @model_validator(mode="after")
    def _one_source(self):
        if (self.graph is None) == (self.graph_text is None):
            raise ValueError("exactly one of graph or graph_text is required")
        return self


class RunOptions(GraphSource):
    k: int = Field(3, ge=2)
    relation: str = "identity"
    weight: str = "unit"
    filter: str = "none"
    budget: int = Field(100, ge=1)
    tours: int = Field(10, ge=1)
    seed: int = 0
    max_tour_len: int = Field(10**7, ge=3)
    enumeration_cap: int = Field(2_000_000, ge=1)
    certified_cap: Optional[int] = Field(None, ge=1)
    allow_truncation: bool = False
    raw: bool = False


class EstimateRequest(RunOptions):
    steps: int = Field(1000, ge=1)
    burn_in: Optional[int] = Field(None, ge=0)
    workers: int = Field(1, ge=1)
    queue_capacity: int = Field(1024, ge=1)
    batch: int = Field(64, ge=1)
    mcc: bool = False
    truth: Optional[dict[str, Any]] = Field(None, description="exact report used for the SSE trajectory")
    checkpoints: Optional[list[int]] = None


class ExactRequest(RunOptions):
    mcc: bool = False


class SweepRequest(RunOptions):
    anchor: list[int]
    budgets: list[int] = Field(default_factory=lambda: [10, 100, 1000])
    tour_counts: list[int] = Field(default_factory=lambda: [10, 100])
    repeats: int = Field(10, ge=1)


class ExportRequest(EstimateRequest):
    n: int = Field(100, ge=0)


class CompareRequest(BaseModel):
    report_a: dict[str, Any]
    report_b: dict[str, Any]
    sizes: list[int] = Field(default_factory=lambda: [50, 100, 500])


class ComparisonRow(BaseModel):
    size: int
    tau: float = Field(ge=-1.0, le=1.0)
    p_value: float
    items: int


class CompareResponse(BaseModel):
    comparisons: list[ComparisonRow]


class SweepResponse(BaseModel):
    exact_alpha: Optional[float]
    rows: list[dict[str, Any]]
    summary: list[dict[str, Any]]


class ExportRecord(BaseModel):
    nodes: list[int]
    code: str
    alpha1: float
    alpha2: float


class ExportResponse(BaseModel):
    records: list[ExportRecord]


class ErrorResponse(BaseModel):
    error: str
    detail: str
