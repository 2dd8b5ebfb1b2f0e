"""Request and response models. Complex data travels as paired re/im arrays."""

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..scenario import matrix_from_json


class ComplexMatrix(BaseModel):
    re: List[List[float]]
    im: Optional[List[List[float]]] = None

    def to_numpy(self):
        return matrix_from_json(self.model_dump(exclude_none=True))


class ComplexVector(BaseModel):
    re: List[float]
    im: List[float]

    @classmethod
    def from_numpy(cls, w):
        w = np.asarray(w, dtype=complex)
        return cls(re=w.real.tolist(), im=w.imag.tolist())


class SolveRequest(BaseModel):
    rhat: ComplexMatrix
    rs: ComplexMatrix
    gamma: Optional[float] = Field(None, ge=0, description="default 0.1 ||rhat||_F")
    eta: Optional[float] = Field(None, ge=0, description="default 0.5 sqrt(tr rs)")
    xi: float = Field(1e-8, gt=0)
    max_outer: int = Field(500, ge=1)
    method: Literal["inner_socp", "direct_form"] = "inner_socp"


class TraceEntry(BaseModel):
    k: int
    v: float
    t: Optional[float]
    gap: float
    status: str
    ms: float


class SolveResponse(BaseModel):
    method: str
    gamma: float
    eta: float
    w14: ComplexVector
    v14: float
    w13: ComplexVector
    val13: float
    converged: bool
    outer_iterations: int
    trace: List[TraceEntry]


class OracleRequest(BaseModel):
    rhat: ComplexMatrix
    rs: ComplexMatrix
    gamma: Optional[float] = Field(None, ge=0)
    eta: Optional[float] = Field(None, ge=0)
    starts: int = Field(200, ge=1)
    seed: int = 0


class HistogramBin(BaseModel):
    value: float
    count: int


class OracleResponse(BaseModel):
    gamma: float
    eta: float
    best_value: float
    val13: float
    best_w: ComplexVector
    n_starts: int
    n_converged: int
    value_histogram: List[HistogramBin]


class ExperimentRequest(BaseModel):
    config: str = Field("", description="key = value experiment config text")


class ExperimentResponse(BaseModel):
    csv: str
    rows: int
    summary: str


class ErrorResponse(BaseModel):
    error: str
    detail: str


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
