"""FastAPI application wiring the schema handlers to HTTP endpoints."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import CapacityFirmingError
from . import handlers
from .schemas import (
    EvaluateRequest,
    EvaluateResponse,
    HealthResponse,
    PlanRequest,
    PlanResponse,
    ScenariosRequest,
    ScenariosResponse,
    SimulateRequest,
    SimulateResponse,
    SweepRequest,
    SweepResponse,
    SynthRequest,
    SynthResponse,
)

app = FastAPI(
    title="capfirm",
    version=__version__,
    description="Day-ahead capacity-firming nominations for a PV plant "
                "with battery storage",
)


@app.exception_handler(CapacityFirmingError)
async def domain_error_handler(request: Request, exc: CapacityFirmingError):
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.get("/api/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return handlers.handle_health()


@app.post("/api/plan", response_model=PlanResponse)
def plan(req: PlanRequest) -> PlanResponse:
    return handlers.handle_plan(req)


@app.post("/api/evaluate", response_model=EvaluateResponse)
def evaluate(req: EvaluateRequest) -> EvaluateResponse:
    return handlers.handle_evaluate(req)


@app.post("/api/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    return handlers.handle_simulate(req)


@app.post("/api/sweep-bess", response_model=SweepResponse)
def sweep_bess(req: SweepRequest) -> SweepResponse:
    return handlers.handle_sweep(req)


@app.post("/api/scenarios", response_model=ScenariosResponse)
def scenarios(req: ScenariosRequest) -> ScenariosResponse:
    return handlers.handle_scenarios(req)


@app.post("/api/synth-data", response_model=SynthResponse)
def synth_data(req: SynthRequest) -> SynthResponse:
    return handlers.handle_synth(req)
