"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class FeederRequest(BaseModel):
    """Parameters for synthesizing a feeder."""

    n: int = Field(default=56, ge=1, le=2000)
    seed: int = Field(default=0, ge=0)
    overload_factor: float = Field(default=1.5, ge=0.0)
    limit_pct: float = Field(default=5.0, gt=0.0, le=20.0)


class FeederResponse(BaseModel):
    csv: str
    n: int
    max_uncontrolled_deviation: float
    activated: bool


class ScenarioRequest(BaseModel):
    """A scenario file's content; the referenced network may be inlined.

    When the scenario points at a network file, clients must attach that
    file's text as ``network_csv`` (the service has no access to client
    paths).
    """

    scenario: str
    network_csv: str | None = None


class SweepRequest(ScenarioRequest):
    magnitudes: list[float] = Field(min_length=1)


class MethodSummary(BaseModel):
    name: str
    status: str
    steps: int
    final_max_x: float | None = None
    final_max_kv: float | None = None
    violations: int
    violations_after_start: int
    objective: float | None = None
    gap: float | None = None
    error: str | None = None


class RunResponse(BaseModel):
    n: int
    eps_b: float
    relative_error: float
    methods: list[MethodSummary]
    table: str
    trajectories: dict[str, str]
    plot_svg: str


class CompareResponse(BaseModel):
    n: int
    eps_b: float
    relative_error: float
    methods: list[MethodSummary]
    table: str


class SweepRow(BaseModel):
    magnitude: float
    eps_b: float | None = None
    relative_error: float | None = None
    status: str
    steps: int | None = None
    final_max_x: float | None = None
    violations_after_start: int | None = None
    objective: float | None = None
    gap: float | None = None
    error: str | None = None


class SweepResponse(BaseModel):
    rows: list[SweepRow]
    table: str
    csv: str
