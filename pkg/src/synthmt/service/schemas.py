"""Pydantic request/response models for the synthesis service.

Artifacts travel as their text forms (spec grammar / JSON artifacts);
exact rational values are ints or "p/q" strings.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field

RatValue = Union[int, str]


class ErrorBody(BaseModel):
    component: str
    kind: str
    message: str
    witness: Optional[list[str]] = None


class AbstractRequest(BaseModel):
    spec: str


class AbstractResponse(BaseModel):
    table: str
    boolean_spec: str
    letters: list[str]
    literals: list[str]


class SynthRequest(BaseModel):
    boolean_spec: str
    import_mealy: Optional[str] = None


class SynthResponse(BaseModel):
    mealy: str
    states: int
    imported: bool


class SkolemRequest(BaseModel):
    # either the table artifact or the boolean-spec artifact (which
    # embeds the table) identifies the reactions
    table: Optional[str] = None
    boolean_spec: Optional[str] = None
    mealy: str
    gamma: Optional[str] = None
    all_pairs: bool = False  # True synthesizes every (letter, choice) pair


class SkolemResponse(BaseModel):
    provider: str
    pairs: int


class EmitCRequest(BaseModel):
    provider: str
    name: str = "skolem"


class EmitCResponse(BaseModel):
    source: str
    functions: list[str]


class ReportModel(BaseModel):
    steps: int
    ok: bool
    violations: list[dict]


class RunRequest(BaseModel):
    spec: str
    mealy: Optional[str] = None
    provider: Literal["static", "dynamic", "adaptive"] = "static"
    provider_artifact: Optional[str] = None
    gamma: Optional[str] = None
    inputs: str
    seed: int = 0
    randomized: bool = False


class RunResponse(BaseModel):
    outputs: str
    report: ReportModel


class CheckRequest(BaseModel):
    spec: str
    trace: str


class CheckResponse(BaseModel):
    report: ReportModel


class ComponentStatsModel(BaseModel):
    mean_us: float
    p50_us: float
    p95_us: float
    p99_us: float


class BenchReportModel(BaseModel):
    provider_kind: str
    steps: int
    repeats: int
    seed: int
    reference: str
    partition: ComponentStatsModel
    machine: ComponentStatsModel
    provider: ComponentStatsModel
    divergence_pct: float = Field(ge=0.0, le=100.0)


class BenchRequest(BaseModel):
    spec: Optional[str] = None
    syn_literals: Optional[int] = None
    theory: Literal["int", "real"] = "int"
    steps: int = 1000
    repeats: int = 1
    seed: int = 0
    provider: Literal["static", "adaptive"] = "static"
    gamma: Optional[str] = None
    inputs: Optional[str] = None
    import_mealy: Optional[str] = None


class BenchResponse(BaseModel):
    static: BenchReportModel
    dynamic: BenchReportModel
    csv: str
    ratio_static_over_dynamic: float


class SessionCreateRequest(BaseModel):
    spec: str
    mealy: Optional[str] = None
    provider: Literal["static", "dynamic", "adaptive"] = "static"
    provider_artifact: Optional[str] = None
    gamma: Optional[str] = None
    seed: int = 0
    randomized: bool = False
    z_defaults: dict[str, RatValue] = Field(default_factory=dict)


class SessionCreateResponse(BaseModel):
    session_id: str
    letters: list[str]
    state: str


class SessionStepRequest(BaseModel):
    x: dict[str, RatValue]
    z: Optional[dict[str, RatValue]] = None


class SessionStepResponse(BaseModel):
    index: int
    letter: str
    choice: str
    y: dict[str, RatValue]
    state: str
    partition_us: float
    machine_us: float
    provide_us: float


class SessionInfoResponse(BaseModel):
    session_id: str
    steps: int
    state: str
    provider_kind: str
