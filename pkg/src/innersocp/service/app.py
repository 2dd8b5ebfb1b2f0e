"""FastAPI application: single-instance solves, oracle runs and sweeps."""

import configparser
import math
from importlib.metadata import PackageNotFoundError, version

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from ..beamformer import (RobustParams, derive_params, factorize_presumed,
                          solve_direct_form, solve_inner_socp)
from ..errors import (DegenerateLinearizationError, InfeasibleProblemError,
                      SubproblemFailure, ValidationError)
from ..experiment import experiment_from_text, format_csv, run_experiment, summary_table
from ..linalg import as_hermitian
from ..oracle import multistart_minimize
from .schemas import (ComplexVector, ErrorResponse, ExperimentRequest, ExperimentResponse,
                      HealthResponse, OracleRequest, OracleResponse, SolveRequest,
                      SolveResponse, TraceEntry)

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0+unknown"

app = FastAPI(title="innersocp", version=__version__)

_ERRORS = {"model": ErrorResponse}


def _error(status, exc):
    return JSONResponse(status_code=status,
                        content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(ValidationError)
def _on_validation(request, exc):
    return _error(422, exc)


@app.exception_handler(InfeasibleProblemError)
def _on_infeasible(request, exc):
    return _error(422, exc)


@app.exception_handler(DegenerateLinearizationError)
def _on_degenerate(request, exc):
    return _error(422, exc)


@app.exception_handler(SubproblemFailure)
def _on_subproblem(request, exc):
    return _error(500, exc)


def _instance(req):
    Rhat = as_hermitian(req.rhat.to_numpy(), "rhat")
    Rs = as_hermitian(req.rs.to_numpy(), "rs")
    if Rhat.shape != Rs.shape:
        raise ValidationError(f"rhat is {Rhat.shape} but rs is {Rs.shape}")
    base = derive_params(Rhat, Rs)
    gamma = base.gamma if req.gamma is None else req.gamma
    eta = base.eta if req.eta is None else req.eta
    return Rhat, Rs, gamma, eta


def _finite(x):
    return None if x is None or not math.isfinite(x) else x


@app.get("/health", response_model=HealthResponse)
def health():
    return HealthResponse(version=__version__)


@app.post("/solve", response_model=SolveResponse, responses={422: _ERRORS, 500: _ERRORS})
def solve(req: SolveRequest):
    Rhat, Rs, gamma, eta = _instance(req)
    params = RobustParams(gamma, eta, req.xi, req.max_outer)
    Q = factorize_presumed(Rs)
    solver = solve_inner_socp if req.method == "inner_socp" else solve_direct_form
    res = solver(Rhat, Q, params)
    trace = [TraceEntry(k=r.k, v=r.v, t=_finite(r.t), gap=r.gap, status=r.status, ms=r.ms)
             for r in res.trace]
    return SolveResponse(method=res.method, gamma=gamma, eta=eta,
                         w14=ComplexVector.from_numpy(res.w14), v14=res.v14,
                         w13=ComplexVector.from_numpy(res.w13), val13=res.val13,
                         converged=res.converged, outer_iterations=res.outer_iterations,
                         trace=trace)


@app.post("/oracle", response_model=OracleResponse, responses={422: _ERRORS})
def oracle(req: OracleRequest):
    Rhat, Rs, gamma, eta = _instance(req)
    Q = factorize_presumed(Rs)
    rep = multistart_minimize(Rhat, gamma, Q, eta, req.starts, req.seed)
    return OracleResponse(gamma=gamma, eta=eta, best_value=rep.best_value,
                          val13=1.0 / math.sqrt(rep.best_value),
                          best_w=ComplexVector.from_numpy(rep.best_w),
                          n_starts=rep.n_starts, n_converged=rep.n_converged,
                          value_histogram=rep.value_histogram)


@app.post("/experiments", response_model=ExperimentResponse, responses={422: _ERRORS})
def experiments(req: ExperimentRequest):
    try:
        cfg = experiment_from_text(req.config)
    except (configparser.Error, KeyError, ValueError) as exc:
        raise ValidationError(f"bad experiment config: {exc}") from exc
    rows = run_experiment(cfg)
    return ExperimentResponse(csv=format_csv(rows), rows=len(rows), summary=summary_table(rows))
