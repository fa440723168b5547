"""Pydantic request/response schemas for the HTTP service.

Domain models (tender, storage, traces, scenario sets, reports) are
pydantic themselves and embed directly; the schemas here add the
request envelopes and a few response conveniences.
"""

from __future__ import annotations

from datetime import datetime

from pydantic import BaseModel, ConfigDict

from ..domain import BessSpec, PvTrace, ScenarioSet, TenderParams
from ..errors import NegativeParameter
from ..evaluator import DispatchResult, SimulationReport
from ..metrics import BessSweepRow, IndicatorTable
from ..planners import NominationSchedule, PlannerKind
from ..scenariogen import (
    DEFAULT_LEAD_OFFSET,
    DEFAULT_MAX_LEAD,
    ErrorModelParams,
    sigma_from_eps_max,
)


class SolverSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = 1e-8
    max_iter: int = 20000


class ScenarioConfig(BaseModel):
    """Error-model knobs; give either ``sigma`` directly or ``eps_max``."""

    model_config = ConfigDict(frozen=True)

    p: float = 0.9
    sigma: float | None = None
    eps_max: float | None = None
    max_lead: int = DEFAULT_MAX_LEAD
    lead_offset: int = DEFAULT_LEAD_OFFSET

    def to_params(self) -> ErrorModelParams:
        if self.sigma is not None and self.eps_max is not None:
            raise NegativeParameter("give sigma or eps_max, not both")
        if self.sigma is not None:
            sigma = self.sigma
        elif self.eps_max is not None:
            sigma = sigma_from_eps_max(self.eps_max, self.p)
        else:
            raise NegativeParameter("scenario config needs sigma or eps_max")
        return ErrorModelParams(p=self.p, sigma=sigma, max_lead=self.max_lead,
                                lead_offset=self.lead_offset)


class PlanRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    planner: PlannerKind
    trace: PvTrace
    tender: TenderParams = TenderParams()
    bess: BessSpec = BessSpec()
    scenario: ScenarioConfig | None = None
    n_scenarios: int = 100
    seed: int = 0
    solver: SolverSettings = SolverSettings()


class PlannedDay(BaseModel):
    model_config = ConfigDict(frozen=True)

    schedule: NominationSchedule
    n_variables: int
    n_constraints: int


class PlanResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    days: tuple[PlannedDay, ...]
    total_objective: float


class DayNominations(BaseModel):
    model_config = ConfigDict(frozen=True)

    day_index: int
    nominations_kwh: tuple[float, ...]


class EvaluateRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    nominations: tuple[DayNominations, ...]
    measured: PvTrace
    tender: TenderParams = TenderParams()
    bess: BessSpec = BessSpec()
    solver: SolverSettings = SolverSettings()


class EvaluateResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    days: tuple[DispatchResult, ...]
    aggregate_objective: float


class SimulateRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    planner: PlannerKind
    trace: PvTrace
    tender: TenderParams = TenderParams()
    bess: BessSpec = BessSpec()
    scenario: ScenarioConfig | None = None
    n_scenarios: int = 100
    seed: int = 0
    solver: SolverSettings = SolverSettings()
    jobs: int = 1


class SimulateResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    report: SimulationReport
    indicators: IndicatorTable


class SweepRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    trace: PvTrace
    cases: tuple[BessSpec, ...]
    planner: PlannerKind = PlannerKind.PERFECT
    tender: TenderParams = TenderParams()
    scenario: ScenarioConfig | None = None
    n_scenarios: int = 100
    seed: int = 0
    solver: SolverSettings = SolverSettings()
    capex_keur_per_kwh: float | None = None
    horizon_months: int = 180
    jobs: int = 1


class SizingSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    optimal_kwh: float
    breakeven_capex_keur_per_kwh: float
    fit_a: float
    fit_b: float
    fit_c: float


class SweepResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    rows: tuple[BessSweepRow, ...]
    sizing: SizingSummary | None


class ScenariosRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    trace: PvTrace
    day_index: int = 0
    scenario: ScenarioConfig = ScenarioConfig(eps_max=0.25)
    n_scenarios: int = 5
    seed: int = 0
    tender: TenderParams = TenderParams()


class ScenariosResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenarios: ScenarioSet
    params: ErrorModelParams
    seed: int


class SynthRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    days: int = 28
    capacity_kwp: float = 2000.0
    peak_fraction: float = 0.494
    seed: int = 0
    period_minutes: float = 15.0
    start: datetime = datetime(2019, 2, 1)


class SynthResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    trace: PvTrace


class HealthResponse(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: str
    version: str
